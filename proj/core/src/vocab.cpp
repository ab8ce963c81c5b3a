#include "cqda/vocab.hpp"

#include <fstream>
#include <sstream>

#include "cqda/errors.hpp"

namespace cqda {

EntityId Vocab::add_entity(const std::string& label) {
    auto it = entity_ids_.find(label);
    if (it != entity_ids_.end()) return it->second;
    auto id = static_cast<EntityId>(entity_labels_.size());
    entity_ids_.emplace(label, id);
    entity_labels_.push_back(label);
    return id;
}

RelationId Vocab::add_relation(const std::string& label) {
    auto it = relation_ids_.find(label);
    if (it != relation_ids_.end()) return it->second;
    auto id = static_cast<RelationId>(relation_labels_.size());
    relation_ids_.emplace(label, id);
    relation_labels_.push_back(label);
    return id;
}

EntityId Vocab::entity_id(const std::string& label) const {
    auto it = entity_ids_.find(label);
    if (it == entity_ids_.end()) throw VocabError("unknown entity label: " + label);
    return it->second;
}

RelationId Vocab::relation_id(const std::string& label) const {
    auto it = relation_ids_.find(label);
    if (it == relation_ids_.end()) throw VocabError("unknown relation label: " + label);
    return it->second;
}

const std::string& Vocab::entity_label(EntityId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= entity_labels_.size()) {
        throw DomainError("entity index out of range: " + std::to_string(id));
    }
    return entity_labels_[static_cast<std::size_t>(id)];
}

const std::string& Vocab::relation_label(RelationId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= relation_labels_.size()) {
        throw DomainError("relation index out of range: " + std::to_string(id));
    }
    return relation_labels_[static_cast<std::size_t>(id)];
}

namespace {

std::string table_to_tsv(const std::vector<std::string>& labels) {
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out += labels[i];
        out += '\t';
        out += std::to_string(i);
        out += '\n';
    }
    return out;
}

std::vector<std::string> table_from_tsv(const std::string& tsv, const char* what) {
    std::vector<std::string> labels;
    std::istringstream in(tsv);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError(std::string(what) + " vocab line " + std::to_string(lineno) +
                                 ": missing tab",
                             0);
        }
        std::string label = line.substr(0, tab);
        std::size_t index = std::stoull(line.substr(tab + 1));
        if (index != labels.size()) {
            throw VocabError(std::string(what) + " vocab line " + std::to_string(lineno) +
                             ": indices must be dense from 0, got " + std::to_string(index));
        }
        labels.push_back(std::move(label));
    }
    return labels;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string Vocab::entities_to_tsv() const { return table_to_tsv(entity_labels_); }
std::string Vocab::relations_to_tsv() const { return table_to_tsv(relation_labels_); }

Vocab Vocab::from_tsv(const std::string& entities_tsv, const std::string& relations_tsv) {
    Vocab v;
    for (auto& label : table_from_tsv(entities_tsv, "entity")) v.add_entity(label);
    for (auto& label : table_from_tsv(relations_tsv, "relation")) v.add_relation(label);
    if (v.n_entities() != v.entity_ids_.size()) throw VocabError("duplicate entity label");
    if (v.n_relations() != v.relation_ids_.size()) throw VocabError("duplicate relation label");
    return v;
}

void Vocab::save(const std::string& entity_path, const std::string& relation_path) const {
    std::ofstream e(entity_path, std::ios::binary);
    if (!e) throw IoError("cannot write " + entity_path);
    e << entities_to_tsv();
    std::ofstream r(relation_path, std::ios::binary);
    if (!r) throw IoError("cannot write " + relation_path);
    r << relations_to_tsv();
}

Vocab Vocab::load(const std::string& entity_path, const std::string& relation_path) {
    return from_tsv(read_file(entity_path), read_file(relation_path));
}

}  // namespace cqda
