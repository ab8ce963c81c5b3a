#pragma once

#include <cstdint>
#include <vector>

#include "cqda/adapter.hpp"
#include "cqda/dnf.hpp"
#include "cqda/embeddings.hpp"
#include "cqda/fuzzy.hpp"

namespace cqda {

struct EngineConfig {
    FuzzyConfig fuzzy;
    NormalizeKind normalize = NormalizeKind::sigmoid;
    std::int64_t beam_width = 1024;
    const AdapterParams* adapter = nullptr;      // nullptr = unadapted scores
    std::size_t oracle_budget = 10'000'000;      // |E|^m cap for exhaustive mode
};

// Beam search over the dependency DAG (per disjunct, variables in
// topological order). Positive literals with a grounded source extend the
// beam over all entities; negated literals only re-score once both endpoints
// are grounded. Intermediate beams keep, per distinct binding of the
// variables still referenced by later literals, the best-scoring entry
// (ties broken by ascending entity-index tuple), truncated to the beam
// width. The target expansion scores every entity; unreached entities score
// 0 and disjunct vectors combine elementwise with the t-conorm.
std::vector<double> answer_beam(const Embeddings& emb, const Vocab& vocab,
                                const EngineConfig& cfg, const DnfQuery& q);

// Exact maximization over all intermediate-variable assignments; the
// reference semantics answer_beam approximates. Throws BudgetError when
// |E|^m exceeds the configured budget.
std::vector<double> answer_exhaustive(const Embeddings& emb, const Vocab& vocab,
                                      const EngineConfig& cfg, const DnfQuery& q);

double score_candidate(const Embeddings& emb, const Vocab& vocab, const EngineConfig& cfg,
                       const DnfQuery& q, EntityId candidate, bool exact = false);

}  // namespace cqda
