#include "cqda/adapter.hpp"

#include <algorithm>
#include <cmath>

#include "cqda/errors.hpp"
#include "cqda/rng.hpp"

namespace cqda {

AdapterVariant adapter_variant_from_string(const std::string& name) {
    if (name == "global") return AdapterVariant::global;
    if (name == "predicate") return AdapterVariant::predicate;
    if (name == "predicate-source" || name == "predicate_source") {
        return AdapterVariant::predicate_source;
    }
    if (name == "mlp1") return AdapterVariant::mlp1;
    if (name == "mlp2") return AdapterVariant::mlp2;
    throw ConfigError("unknown adapter variant: " + name);
}

std::string to_string(AdapterVariant v) {
    switch (v) {
        case AdapterVariant::global: return "global";
        case AdapterVariant::predicate: return "predicate";
        case AdapterVariant::predicate_source: return "predicate-source";
        case AdapterVariant::mlp1: return "mlp1";
        case AdapterVariant::mlp2: return "mlp2";
    }
    return "?";
}

std::size_t AdapterParams::input_width() const {
    switch (variant) {
        case AdapterVariant::global: return 0;
        case AdapterVariant::predicate_source: return static_cast<std::size_t>(4 * dim);
        default: return static_cast<std::size_t>(2 * dim);
    }
}

AdapterParams init_adapter(AdapterVariant variant, std::int64_t dim, std::uint64_t seed,
                           std::int64_t hidden) {
    if (dim < 1 && variant != AdapterVariant::global) {
        throw ConfigError("adapter: dim must be >= 1 for conditioned variants");
    }
    if (hidden < 1) throw ConfigError("adapter: hidden width must be >= 1");
    AdapterParams a;
    a.variant = variant;
    a.dim = dim;
    a.hidden = hidden;
    std::size_t in = a.input_width();
    std::size_t h = static_cast<std::size_t>(hidden);
    switch (variant) {
        case AdapterVariant::global:
            a.params.assign(2, 0.0);
            break;
        case AdapterVariant::predicate:
        case AdapterVariant::predicate_source:
            a.params.assign(2 * in, 0.0);
            break;
        case AdapterVariant::mlp1: {
            a.params.assign(h * in + 2 * h, 0.0);
            Rng rng(seed);
            for (std::size_t i = 0; i < h * in; ++i) a.params[i] = rng.normal() * 1e-3;
            // Final layer stays zero so the adapter starts at the identity.
            break;
        }
        case AdapterVariant::mlp2: {
            a.params.assign(h * in + h * h + 2 * h, 0.0);
            Rng rng(seed);
            for (std::size_t i = 0; i < h * in + h * h; ++i) a.params[i] = rng.normal() * 1e-3;
            break;
        }
    }
    return a;
}

namespace {

void gather_input(const AdapterParams& a, const Embeddings& emb, RelationId p, EntityId s,
                  std::vector<double>& x) {
    auto prow = emb.relation_row(p);
    x.assign(prow.begin(), prow.end());
    if (a.variant == AdapterVariant::predicate_source) {
        auto srow = emb.entity_row(s);
        x.insert(x.end(), srow.begin(), srow.end());
    }
    if (x.size() != a.input_width()) {
        throw ConfigError("adapter: embedding dim does not match adapter dim");
    }
}

void matvec(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += w[r * cols + c] * x[c];
        y[r] = acc;
    }
}

}  // namespace

Theta adapter_theta_cached(const AdapterParams& a, const Embeddings& emb, RelationId p,
                           EntityId s, ThetaTape& tape) {
    tape.input.clear();
    tape.h1.clear();
    tape.h2.clear();
    switch (a.variant) {
        case AdapterVariant::global:
            return Theta{a.params[0], a.params[1]};
        case AdapterVariant::predicate:
        case AdapterVariant::predicate_source: {
            gather_input(a, emb, p, s, tape.input);
            double out[2];
            matvec(a.params.data(), 2, tape.input.size(), tape.input.data(), out);
            return Theta{out[0], out[1]};
        }
        case AdapterVariant::mlp1: {
            gather_input(a, emb, p, s, tape.input);
            std::size_t in = tape.input.size();
            std::size_t h = static_cast<std::size_t>(a.hidden);
            tape.h1.resize(h);
            matvec(a.params.data(), h, in, tape.input.data(), tape.h1.data());
            for (auto& v : tape.h1) v = std::max(0.0, v);
            double out[2];
            matvec(a.params.data() + h * in, 2, h, tape.h1.data(), out);
            return Theta{out[0], out[1]};
        }
        case AdapterVariant::mlp2: {
            gather_input(a, emb, p, s, tape.input);
            std::size_t in = tape.input.size();
            std::size_t h = static_cast<std::size_t>(a.hidden);
            tape.h1.resize(h);
            matvec(a.params.data(), h, in, tape.input.data(), tape.h1.data());
            for (auto& v : tape.h1) v = std::max(0.0, v);
            tape.h2.resize(h);
            matvec(a.params.data() + h * in, h, h, tape.h1.data(), tape.h2.data());
            for (auto& v : tape.h2) v = std::max(0.0, v);
            double out[2];
            matvec(a.params.data() + h * in + h * h, 2, h, tape.h2.data(), out);
            return Theta{out[0], out[1]};
        }
    }
    return Theta{};
}

Theta adapter_theta(const AdapterParams& a, const Embeddings& emb, RelationId p, EntityId s) {
    ThetaTape tape;
    return adapter_theta_cached(a, emb, p, s, tape);
}

void adapter_theta_backward(const AdapterParams& a, const ThetaTape& tape, double dalpha,
                            double dbeta, std::vector<double>& grad) {
    if (grad.size() != a.params.size()) {
        throw ContractError("adapter gradient buffer has the wrong size");
    }
    const double dout[2] = {dalpha, dbeta};
    switch (a.variant) {
        case AdapterVariant::global:
            grad[0] += dalpha;
            grad[1] += dbeta;
            return;
        case AdapterVariant::predicate:
        case AdapterVariant::predicate_source: {
            std::size_t in = tape.input.size();
            for (std::size_t r = 0; r < 2; ++r) {
                for (std::size_t c = 0; c < in; ++c) {
                    grad[r * in + c] += dout[r] * tape.input[c];
                }
            }
            return;
        }
        case AdapterVariant::mlp1: {
            std::size_t in = tape.input.size();
            std::size_t h = static_cast<std::size_t>(a.hidden);
            const double* w2 = a.params.data() + h * in;
            std::vector<double> dh(h, 0.0);
            for (std::size_t r = 0; r < 2; ++r) {
                for (std::size_t c = 0; c < h; ++c) {
                    grad[h * in + r * h + c] += dout[r] * tape.h1[c];
                    dh[c] += dout[r] * w2[r * h + c];
                }
            }
            for (std::size_t r = 0; r < h; ++r) {
                if (tape.h1[r] <= 0.0) continue;  // ReLU mask
                for (std::size_t c = 0; c < in; ++c) {
                    grad[r * in + c] += dh[r] * tape.input[c];
                }
            }
            return;
        }
        case AdapterVariant::mlp2: {
            std::size_t in = tape.input.size();
            std::size_t h = static_cast<std::size_t>(a.hidden);
            const double* w2 = a.params.data() + h * in;
            const double* w3 = a.params.data() + h * in + h * h;
            std::vector<double> dh2(h, 0.0);
            for (std::size_t r = 0; r < 2; ++r) {
                for (std::size_t c = 0; c < h; ++c) {
                    grad[h * in + h * h + r * h + c] += dout[r] * tape.h2[c];
                    dh2[c] += dout[r] * w3[r * h + c];
                }
            }
            std::vector<double> dh1(h, 0.0);
            for (std::size_t r = 0; r < h; ++r) {
                if (tape.h2[r] <= 0.0) continue;
                for (std::size_t c = 0; c < h; ++c) {
                    grad[h * in + r * h + c] += dh2[r] * tape.h1[c];
                    dh1[c] += dh2[r] * w2[r * h + c];
                }
            }
            for (std::size_t r = 0; r < h; ++r) {
                if (tape.h1[r] <= 0.0) continue;
                for (std::size_t c = 0; c < in; ++c) {
                    grad[r * in + c] += dh1[r] * tape.input[c];
                }
            }
            return;
        }
    }
}

double adapt_pre_clamp(double alpha, double beta, double x) {
    if (!std::isfinite(alpha) || !std::isfinite(beta)) {
        throw NumericError("adapt: non-finite adaptation parameters");
    }
    return x * (1.0 + alpha) + beta;
}

double adapt(double alpha, double beta, double x) {
    return std::clamp(adapt_pre_clamp(alpha, beta, x), 0.0, 1.0);
}

void adapt_vector(const Theta& theta, std::vector<double>& scores) {
    if (!std::isfinite(theta.alpha) || !std::isfinite(theta.beta)) {
        throw NumericError("adapt: non-finite adaptation parameters");
    }
    for (auto& v : scores) v = std::clamp(v * (1.0 + theta.alpha) + theta.beta, 0.0, 1.0);
}

}  // namespace cqda
