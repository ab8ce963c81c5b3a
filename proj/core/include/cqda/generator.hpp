#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cqda/dnf.hpp"
#include "cqda/exact.hpp"
#include "cqda/rng.hpp"
#include "cqda/triple_store.hpp"

namespace cqda {

// A grounded query with its answer bookkeeping. `easy` answers are reachable
// on the observed graph; `hard` answers additionally need at least one
// missing link. Both sorted ascending.
struct QueryInstance {
    std::string id;
    QueryAst query;
    Structure structure = Structure::other;
    std::vector<EntityId> easy;
    std::vector<EntityId> hard;
};

struct GenConfig {
    std::size_t max_answers = 100;    // instances with more answers are rejected
    std::size_t retry_budget = 1000;  // grounding attempts before giving up
    bool require_hard = true;         // false when sampling training-graph queries
};

// Samples one instance of `structure` by grounding the template backward from
// a uniformly drawn seed answer on `full`. Returns nullopt (rejection) when
// the grounded query has no hard answer (if required) or exceeds the answer
// cap. Throws BudgetError when no grounding exists within the retry budget.
std::optional<QueryInstance> instantiate_structure(const TripleStore& full,
                                                   const TripleStore& observed,
                                                   const Vocab& vocab, Structure structure,
                                                   Rng& rng, const GenConfig& cfg = {});

// Rejection-samples until `count` instances are accepted. `max_rejections`
// bounds the total rejected attempts (BudgetError when exhausted).
std::vector<QueryInstance> generate_instances(const TripleStore& full,
                                              const TripleStore& observed, const Vocab& vocab,
                                              Structure structure, std::size_t count, Rng& rng,
                                              const GenConfig& cfg = {},
                                              std::size_t max_rejections = 100000);

// JSON Lines: {"id", "query", "structure", "easy", "hard"} with label-form
// entity arrays.
void save_instances_jsonl(const std::string& path, const std::vector<QueryInstance>& instances,
                          const Vocab& vocab);
std::vector<QueryInstance> load_instances_jsonl(const std::string& path, const Vocab& vocab);

}  // namespace cqda
