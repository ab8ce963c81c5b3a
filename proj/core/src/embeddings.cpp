#include "cqda/embeddings.hpp"

#include <cmath>

#include "cqda/errors.hpp"
#include "cqda/rng.hpp"

namespace cqda {

namespace {

constexpr double kInitSigma = 1e-3;

double kernel(const float* s, const float* p, const float* o, std::int64_t dim) {
    double acc = 0.0;
    for (std::int64_t j = 0; j < dim; ++j) {
        double sr = s[2 * j], si = s[2 * j + 1];
        double pr = p[2 * j], pi = p[2 * j + 1];
        double or_ = o[2 * j], oi = o[2 * j + 1];
        acc += (sr * pr - si * pi) * or_ + (sr * pi + si * pr) * oi;
    }
    return acc;
}

}  // namespace

Embeddings init_embeddings(std::size_t n_entities, std::size_t n_relations, std::int64_t dim,
                           std::uint64_t seed) {
    if (dim < 1) throw ConfigError("embedding dim must be >= 1");
    Embeddings emb;
    emb.dim = dim;
    emb.n_entities = n_entities;
    emb.n_relations = n_relations;
    emb.entity.resize(n_entities * 2 * static_cast<std::size_t>(dim));
    emb.relation.resize(n_relations * 2 * static_cast<std::size_t>(dim));
    Rng rng(seed);
    for (auto& v : emb.entity) v = static_cast<float>(rng.normal() * kInitSigma);
    for (auto& v : emb.relation) v = static_cast<float>(rng.normal() * kInitSigma);
    return emb;
}

Embeddings init_embeddings(const Vocab& vocab, std::int64_t dim, std::uint64_t seed) {
    return init_embeddings(vocab.n_entities(), vocab.n_relations(), dim, seed);
}

double score_atom(const Embeddings& emb, RelationId p, EntityId s, EntityId o) {
    if (s < 0 || static_cast<std::size_t>(s) >= emb.n_entities || o < 0 ||
        static_cast<std::size_t>(o) >= emb.n_entities || p < 0 ||
        static_cast<std::size_t>(p) >= emb.n_relations) {
        throw DomainError("score_atom: index out of range");
    }
    return kernel(emb.entity_row(s).data(), emb.relation_row(p).data(),
                  emb.entity_row(o).data(), emb.dim);
}

std::vector<double> score_all_objects(const Embeddings& emb, RelationId p, EntityId s) {
    if (s < 0 || static_cast<std::size_t>(s) >= emb.n_entities || p < 0 ||
        static_cast<std::size_t>(p) >= emb.n_relations) {
        throw DomainError("score_all_objects: index out of range");
    }
    const float* srow = emb.entity_row(s).data();
    const float* prow = emb.relation_row(p).data();
    std::vector<double> out(emb.n_entities);
    for (std::size_t o = 0; o < emb.n_entities; ++o) {
        out[o] = kernel(srow, prow, emb.entity.data() + o * 2 * emb.dim, emb.dim);
    }
    return out;
}

std::vector<double> score_all_subjects(const Embeddings& emb, RelationId p, EntityId o) {
    if (o < 0 || static_cast<std::size_t>(o) >= emb.n_entities || p < 0 ||
        static_cast<std::size_t>(p) >= emb.n_relations) {
        throw DomainError("score_all_subjects: index out of range");
    }
    const float* orow = emb.entity_row(o).data();
    const float* prow = emb.relation_row(p).data();
    std::vector<double> out(emb.n_entities);
    for (std::size_t s = 0; s < emb.n_entities; ++s) {
        out[s] = kernel(emb.entity.data() + s * 2 * emb.dim, prow, orow, emb.dim);
    }
    return out;
}

double n3_term(std::span<const float> row) {
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < row.size(); j += 2) {
        double re = row[j];
        double im = row[j + 1];
        double mod = std::sqrt(re * re + im * im);
        acc += mod * mod * mod;
    }
    return acc;
}

double n3_penalty(const std::vector<std::span<const float>>& rows, double lambda) {
    if (lambda < 0.0) throw ConfigError("n3 weight must be >= 0");
    if (lambda == 0.0) return 0.0;
    double acc = 0.0;
    for (const auto& row : rows) acc += n3_term(row);
    return lambda * acc;
}

NormalizeKind normalize_from_string(const std::string& name) {
    if (name == "sigmoid") return NormalizeKind::sigmoid;
    if (name == "minmax") return NormalizeKind::minmax;
    throw ConfigError("unknown normalization: " + name);
}

std::string to_string(NormalizeKind k) {
    return k == NormalizeKind::sigmoid ? "sigmoid" : "minmax";
}

std::vector<double> normalize(std::span<const double> raw, NormalizeKind kind) {
    if (raw.empty()) throw DomainError("normalize: empty score vector");
    for (double v : raw) {
        if (std::isnan(v)) throw DomainError("normalize: NaN score");
    }
    std::vector<double> out(raw.size());
    if (kind == NormalizeKind::sigmoid) {
        for (std::size_t i = 0; i < raw.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-raw[i]));
        return out;
    }
    double lo = raw[0], hi = raw[0];
    for (double v : raw) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo == hi) {
        // Degenerate range carries no information.
        for (auto& v : out) v = 0.5;
        return out;
    }
    double span = hi - lo;
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - lo) / span;
    return out;
}

}  // namespace cqda
