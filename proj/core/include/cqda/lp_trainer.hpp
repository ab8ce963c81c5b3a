#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cqda/embeddings.hpp"
#include "cqda/triple_store.hpp"

namespace cqda {

enum class LpLoss { one_vs_all, binary_ce };

LpLoss lp_loss_from_string(const std::string& name);
std::string to_string(LpLoss k);

struct LpTrainConfig {
    std::int64_t dim = 1000;  // benchmark-scale default; tests use 64
    std::size_t epochs = 100;
    std::size_t batch_size = 256;
    double learning_rate = 0.1;
    double reg_weight = 1e-2;  // N3 weight
    std::uint64_t seed = 1;
    LpLoss loss = LpLoss::one_vs_all;
};

struct LpTrainResult {
    Embeddings embeddings;
    std::vector<double> loss_trace;  // mean per-triple loss per epoch
};

// Adagrad over shuffled triple batches. Per triple the 1-vs-all loss scores
// both directions (all objects, all subjects) with max-stabilized logsumexp
// in double precision, plus the N3 penalty on the triple's three rows.
// Deterministic for a fixed config; aborts with NumericError on non-finite
// loss.
LpTrainResult train_lp(const TripleStore& store, const LpTrainConfig& cfg);

// One batch item; negatives are only consulted by the binary_ce loss.
struct LpBatchItem {
    Triple triple;
    EntityId neg_object = -1;
    EntityId neg_subject = -1;
};

// Mean per-triple batch loss over double-precision tables (used by training
// and by the finite-difference tests). Tables are row-major [re,im] pairs.
double lp_batch_loss(const std::vector<double>& ent, const std::vector<double>& rel,
                     std::int64_t dim, std::size_t n_entities,
                     std::span<const LpBatchItem> batch, double reg_weight, LpLoss loss);

// Accumulates mean-scaled gradients into dense buffers (same shapes as the
// tables; caller zeroes them).
void lp_batch_grad(const std::vector<double>& ent, const std::vector<double>& rel,
                   std::int64_t dim, std::size_t n_entities, std::span<const LpBatchItem> batch,
                   double reg_weight, LpLoss loss, std::vector<double>& grad_ent,
                   std::vector<double>& grad_rel);

// Filtered MRR for atomic (1p) queries over the store's own triples: ranks
// the object among all entities with the other true objects filtered out,
// expected-rank tie handling.
double lp_filtered_mrr(const Embeddings& emb, const TripleStore& store);

}  // namespace cqda
