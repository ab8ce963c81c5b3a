#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace cqda {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

// Dense label <-> index bijections for entities and relations. Indices start
// at 0 in first-appearance order; labels are compared as raw UTF-8 bytes.
class Vocab {
public:
    EntityId add_entity(const std::string& label);
    RelationId add_relation(const std::string& label);

    // Throws VocabError if the label is unknown.
    EntityId entity_id(const std::string& label) const;
    RelationId relation_id(const std::string& label) const;

    bool has_entity(const std::string& label) const { return entity_ids_.count(label) > 0; }
    bool has_relation(const std::string& label) const { return relation_ids_.count(label) > 0; }

    const std::string& entity_label(EntityId id) const;
    const std::string& relation_label(RelationId id) const;

    std::size_t n_entities() const { return entity_labels_.size(); }
    std::size_t n_relations() const { return relation_labels_.size(); }

    bool operator==(const Vocab& other) const {
        return entity_labels_ == other.entity_labels_ && relation_labels_ == other.relation_labels_;
    }

    // `label<TAB>index` lines, one per entry, index order.
    std::string entities_to_tsv() const;
    std::string relations_to_tsv() const;
    static Vocab from_tsv(const std::string& entities_tsv, const std::string& relations_tsv);

    void save(const std::string& entity_path, const std::string& relation_path) const;
    static Vocab load(const std::string& entity_path, const std::string& relation_path);

private:
    std::unordered_map<std::string, EntityId> entity_ids_;
    std::unordered_map<std::string, RelationId> relation_ids_;
    std::vector<std::string> entity_labels_;
    std::vector<std::string> relation_labels_;
};

}  // namespace cqda
