#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cqda/rng.hpp"
#include "cqda/vocab.hpp"

namespace cqda {

struct Triple {
    EntityId s;
    RelationId p;
    EntityId o;
    bool operator==(const Triple&) const = default;
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const {
        std::uint64_t k = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.s)) << 32) |
                          static_cast<std::uint32_t>(t.o);
        return splitmix64(k ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.p)) << 17));
    }
};

enum class Direction { forward, inverse };

// Immutable-after-load triple set with (s,p)->objects and (o,p)->subjects
// indexes. Construction is single-threaded; reads are safe to share.
class TripleStore {
public:
    void insert(EntityId s, RelationId p, EntityId o);

    bool contains(EntityId s, RelationId p, EntityId o) const {
        return seen_.count({s, p, o}) > 0;
    }

    // forward: {o : (e,p,o) in G}; inverse: {s : (s,p,e) in G}. Sorted
    // ascending after finalize.
    const std::vector<EntityId>& neighbors(EntityId e, RelationId p, Direction dir) const;

    const std::vector<Triple>& triples() const { return triples_; }
    std::size_t size() const { return triples_.size(); }

    // Smallest entity/relation table sizes consistent with the stored ids.
    std::int32_t min_entity_count() const { return min_entity_count_; }
    std::int32_t min_relation_count() const { return min_relation_count_; }

    // Sorts neighbor lists; call once after the last insert.
    void finalize();

    std::size_t duplicates_dropped() const { return duplicates_dropped_; }

private:
    static std::uint64_t key(std::int32_t a, std::int32_t b) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
               static_cast<std::uint32_t>(b);
    }

    std::vector<Triple> triples_;
    std::unordered_set<Triple, TripleHash> seen_;
    std::unordered_map<std::uint64_t, std::vector<EntityId>> by_sp_;
    std::unordered_map<std::uint64_t, std::vector<EntityId>> by_op_;
    std::int32_t min_entity_count_ = 0;
    std::int32_t min_relation_count_ = 0;
    std::size_t duplicates_dropped_ = 0;
    bool finalized_ = false;
};

struct LoadReport {
    std::size_t lines = 0;
    std::size_t triples = 0;
    std::size_t duplicates = 0;
};

// Reads UTF-8 TSV `s\tr\to` lines. With a vocab given, unknown labels raise
// VocabError unless allow_extend; without one, a fresh vocab is built in
// first-appearance order.
std::pair<TripleStore, Vocab> load_triples(const std::string& path,
                                           std::optional<Vocab> vocab = std::nullopt,
                                           bool allow_extend = false,
                                           LoadReport* report = nullptr);

// Merges several TSV files into one store under a shared vocab (observed
// graph = train, full graph = train+valid, ...).
std::pair<TripleStore, Vocab> load_triples_merged(const std::vector<std::string>& paths,
                                                  std::optional<Vocab> vocab = std::nullopt,
                                                  bool allow_extend = true);

void save_triples(const TripleStore& store, const Vocab& vocab, const std::string& path);

}  // namespace cqda
