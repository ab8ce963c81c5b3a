#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "cqda/adapter.hpp"
#include "cqda/eval.hpp"
#include "cqda/fuzzy.hpp"
#include "cqda/generator.hpp"
#include "cqda/lp_trainer.hpp"

namespace cqda {

struct AdapterTrainConfig {
    std::vector<Structure> train_types = {Structure::s2i, Structure::s3i, Structure::s2in,
                                          Structure::s3in};
    std::size_t steps = 50000;
    double learning_rate = 0.1;
    std::size_t batch_size = 128;
    LpLoss loss = LpLoss::one_vs_all;
    double fraction = 1.0;  // (0,1] subsample of the training queries
    std::uint64_t seed = 1;
    AdapterVariant variant = AdapterVariant::predicate;
    std::int64_t hidden = 8;
    FuzzyConfig fuzzy;
    NormalizeKind normalize = NormalizeKind::sigmoid;
    std::size_t log_every = 100;
};

// One intersection-family atom: anchor source, target destination. Queries
// with intermediate variables are rejected (the adapter trains only where
// the query score is a direct fold over the answer variable).
struct PreparedAtom {
    RelationId rel = 0;
    EntityId source = 0;
    bool negated = false;
    std::vector<double> normalized;  // pre-adaptation scores over all entities
    Theta theta;
    ThetaTape tape;
};

struct PreparedQuery {
    std::vector<PreparedAtom> atoms;
    std::vector<EntityId> answers;        // positives (easy + hard), sorted
    std::vector<EntityId> known_answers;  // excluded from negative sampling
};

PreparedQuery prepare_query(const Embeddings& emb, const Vocab& vocab,
                            const AdapterParams& adapter, const QueryInstance& inst,
                            NormalizeKind normalize);

// Adapted candidate scores of a prepared query: t-norm fold over the atoms
// in literal order (negated atoms contribute their fuzzy negation).
std::vector<double> prepared_scores(const PreparedQuery& q, const FuzzyConfig& fuzzy);

// Mean loss over (query, answer) pairs. one_vs_all: -score(a) + logsumexp of
// all candidate scores (max-stabilized, double). binary_ce: Bernoulli log
// loss on the answer against one uniformly sampled non-answer.
double prepared_batch_loss(std::span<const PreparedQuery> batch, const FuzzyConfig& fuzzy,
                           LpLoss loss, std::uint64_t negative_seed);

// Exact analytic gradients for every adapter parameter (embeddings frozen):
// straight-through inside the adapt clamp, product rule through the product
// t-norm, first-argmin subgradient for the Gödel t-norm, and step masks for
// Lukasiewicz.
std::vector<double> prepared_batch_grad(std::span<const PreparedQuery> batch,
                                        const AdapterParams& adapter, const FuzzyConfig& fuzzy,
                                        LpLoss loss, std::uint64_t negative_seed);

double adapter_loss(const Embeddings& emb, const Vocab& vocab, const AdapterParams& adapter,
                    std::span<const QueryInstance> batch, const AdapterTrainConfig& cfg);

std::vector<double> adapter_grad(const Embeddings& emb, const Vocab& vocab,
                                 const AdapterParams& adapter,
                                 std::span<const QueryInstance> batch,
                                 const AdapterTrainConfig& cfg);

// Deterministic nested subsample: a seeded shuffle taken as a prefix, so the
// fraction-f set is a subset of every fraction-f' >= f set under one seed.
std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed);

struct AdapterTrainResult {
    AdapterParams adapter;
    std::vector<std::pair<std::size_t, double>> trace;  // (step, loss) every log_every steps
};

// Adagrad over the filtered + subsampled queries. Deterministic for a fixed
// config; `csv_log` (optional) receives `step,loss,grad_norm,wall_ms` rows.
AdapterTrainResult train_adapter(const Embeddings& emb, const Vocab& vocab,
                                 const std::vector<QueryInstance>& queries,
                                 const AdapterTrainConfig& cfg, std::ostream* csv_log = nullptr);

}  // namespace cqda
