#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cqda/embeddings.hpp"

namespace cqda {

enum class AdapterVariant { global, predicate, predicate_source, mlp1, mlp2 };

AdapterVariant adapter_variant_from_string(const std::string& name);
std::string to_string(AdapterVariant v);

// Trainable recalibration parameters. The conditioning map emits exactly one
// (alpha, beta) pair per atom; the backbone stays frozen.
//
// Parameter layouts (row-major):
//   global            [alpha, beta]
//   predicate         W: 2 x 2d over the flattened relation embedding
//   predicate_source  W: 2 x 4d over [relation; subject]
//   mlp1              W1: h x 2d, ReLU, W2: 2 x h
//   mlp2              W1: h x 2d, ReLU, W2: h x h, ReLU, W3: 2 x h
struct AdapterParams {
    AdapterVariant variant = AdapterVariant::global;
    std::int64_t dim = 0;     // backbone embedding dim d
    std::int64_t hidden = 8;  // mlp hidden width
    std::vector<double> params;

    std::size_t param_count() const { return params.size(); }
    std::size_t input_width() const;
};

// All parameters zero (identity adapter) except mlp hidden layers, which get
// a small Gaussian while the final layer stays zero.
AdapterParams init_adapter(AdapterVariant variant, std::int64_t dim, std::uint64_t seed,
                           std::int64_t hidden = 8);

struct Theta {
    double alpha = 0.0;
    double beta = 0.0;
};

Theta adapter_theta(const AdapterParams& params, const Embeddings& emb, RelationId p, EntityId s);

// Forward pass with the intermediate activations needed for the backward
// pass through the conditioning map.
struct ThetaTape {
    std::vector<double> input;
    std::vector<double> h1;
    std::vector<double> h2;
};

Theta adapter_theta_cached(const AdapterParams& params, const Embeddings& emb, RelationId p,
                           EntityId s, ThetaTape& tape);

// Accumulates d(loss)/d(params) given d(loss)/d(alpha, beta) at the tape
// point. `grad` has the same layout as params.
void adapter_theta_backward(const AdapterParams& params, const ThetaTape& tape, double dalpha,
                            double dbeta, std::vector<double>& grad);

// x(1 + alpha) + beta clamped to [0,1]. Gradients pass through unclamped
// points only: d/dx = 1+alpha, d/dalpha = x, d/dbeta = 1 inside [0,1].
double adapt(double alpha, double beta, double x);
double adapt_pre_clamp(double alpha, double beta, double x);
void adapt_vector(const Theta& theta, std::vector<double>& scores);

}  // namespace cqda
