#include "cqda/triple_store.hpp"

#include <algorithm>
#include <fstream>

#include "cqda/errors.hpp"

namespace cqda {

namespace {
const std::vector<EntityId> kEmpty;
}

void TripleStore::insert(EntityId s, RelationId p, EntityId o) {
    if (s < 0 || p < 0 || o < 0) throw DomainError("negative index in triple");
    Triple t{s, p, o};
    if (!seen_.insert(t).second) {
        ++duplicates_dropped_;
        return;
    }
    triples_.push_back(t);
    by_sp_[key(s, p)].push_back(o);
    by_op_[key(o, p)].push_back(s);
    min_entity_count_ = std::max({min_entity_count_, s + 1, o + 1});
    min_relation_count_ = std::max(min_relation_count_, p + 1);
    finalized_ = false;
}

const std::vector<EntityId>& TripleStore::neighbors(EntityId e, RelationId p,
                                                    Direction dir) const {
    if (e < 0 || e >= min_entity_count_ || p < 0 || p >= min_relation_count_) {
        throw DomainError("neighbors: index out of range (entity " + std::to_string(e) +
                          ", relation " + std::to_string(p) + ")");
    }
    const auto& index = dir == Direction::forward ? by_sp_ : by_op_;
    auto it = index.find(key(e, p));
    return it == index.end() ? kEmpty : it->second;
}

void TripleStore::finalize() {
    if (finalized_) return;
    for (auto& [k, v] : by_sp_) std::sort(v.begin(), v.end());
    for (auto& [k, v] : by_op_) std::sort(v.begin(), v.end());
    finalized_ = true;
}

namespace {

void parse_into(const std::string& path, TripleStore& store, Vocab& vocab, bool frozen,
                LoadReport& report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open triple file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++report.lines;
        auto t1 = line.find('\t');
        auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        auto t3 = t2 == std::string::npos ? std::string::npos : line.find('\t', t2 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos || t3 != std::string::npos) {
            throw ParseError(path + ": line " + std::to_string(lineno) +
                                 ": expected `subject<TAB>relation<TAB>object`",
                             0);
        }
        std::string s = line.substr(0, t1);
        std::string r = line.substr(t1 + 1, t2 - t1 - 1);
        std::string o = line.substr(t2 + 1);
        if (s.empty() || r.empty() || o.empty()) {
            throw ParseError(path + ": line " + std::to_string(lineno) + ": empty field", 0);
        }
        EntityId si, oi;
        RelationId ri;
        if (frozen) {
            if (!vocab.has_entity(s) || !vocab.has_relation(r) || !vocab.has_entity(o)) {
                throw VocabError(path + ": line " + std::to_string(lineno) +
                                 ": label not in frozen vocab");
            }
            si = vocab.entity_id(s);
            ri = vocab.relation_id(r);
            oi = vocab.entity_id(o);
        } else {
            si = vocab.add_entity(s);
            ri = vocab.add_relation(r);
            oi = vocab.add_entity(o);
        }
        std::size_t before = store.duplicates_dropped();
        store.insert(si, ri, oi);
        if (store.duplicates_dropped() > before) ++report.duplicates;
    }
}

}  // namespace

std::pair<TripleStore, Vocab> load_triples(const std::string& path, std::optional<Vocab> vocab,
                                           bool allow_extend, LoadReport* report) {
    TripleStore store;
    Vocab v = vocab.has_value() ? std::move(*vocab) : Vocab{};
    bool frozen = vocab.has_value() && !allow_extend;
    LoadReport local;
    parse_into(path, store, v, frozen, local);
    store.finalize();
    local.triples = store.size();
    if (report != nullptr) *report = local;
    return {std::move(store), std::move(v)};
}

std::pair<TripleStore, Vocab> load_triples_merged(const std::vector<std::string>& paths,
                                                  std::optional<Vocab> vocab, bool allow_extend) {
    TripleStore store;
    Vocab v = vocab.has_value() ? std::move(*vocab) : Vocab{};
    bool frozen = vocab.has_value() && !allow_extend;
    LoadReport local;
    for (const auto& path : paths) parse_into(path, store, v, frozen, local);
    store.finalize();
    return {std::move(store), std::move(v)};
}

void save_triples(const TripleStore& store, const Vocab& vocab, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write triple file: " + path);
    for (const auto& t : store.triples()) {
        out << vocab.entity_label(t.s) << '\t' << vocab.relation_label(t.p) << '\t'
            << vocab.entity_label(t.o) << '\n';
    }
}

}  // namespace cqda
