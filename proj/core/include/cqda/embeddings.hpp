#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cqda/vocab.hpp"

namespace cqda {

// Complex-valued entity/relation tables. Storage is float32, row-major, each
// dimension interleaved [re, im]; all arithmetic accumulates in double.
struct Embeddings {
    std::int64_t dim = 0;
    std::size_t n_entities = 0;
    std::size_t n_relations = 0;
    std::vector<float> entity;    // n_entities x 2*dim
    std::vector<float> relation;  // n_relations x 2*dim

    std::span<const float> entity_row(EntityId e) const {
        return {entity.data() + static_cast<std::size_t>(e) * 2 * dim,
                static_cast<std::size_t>(2 * dim)};
    }
    std::span<const float> relation_row(RelationId p) const {
        return {relation.data() + static_cast<std::size_t>(p) * 2 * dim,
                static_cast<std::size_t>(2 * dim)};
    }
};

// Gaussian init (sigma = 1e-3), filled in storage order from the seed;
// bit-reproducible for fixed (counts, dim, seed).
Embeddings init_embeddings(std::size_t n_entities, std::size_t n_relations, std::int64_t dim,
                           std::uint64_t seed);
Embeddings init_embeddings(const Vocab& vocab, std::int64_t dim, std::uint64_t seed);

// Re(sum_j e_s[j] * e_p[j] * conj(e_o[j])); unbounded raw score.
double score_atom(const Embeddings& emb, RelationId p, EntityId s, EntityId o);

// v[o] = score_atom(emb, p, s, o) for every entity o (same kernel, same
// order, so elementwise bitwise-equal to score_atom).
std::vector<double> score_all_objects(const Embeddings& emb, RelationId p, EntityId s);

// v[s] = score_atom(emb, p, s, o) for every entity s.
std::vector<double> score_all_subjects(const Embeddings& emb, RelationId p, EntityId o);

// Nuclear 3-norm of one embedding row: sum_j |z_j|^3.
double n3_term(std::span<const float> row);

// lambda * sum over rows of n3_term(row); rows listed with multiplicity.
double n3_penalty(const std::vector<std::span<const float>>& rows, double lambda);

enum class NormalizeKind { sigmoid, minmax };

NormalizeKind normalize_from_string(const std::string& name);
std::string to_string(NormalizeKind k);

// sigmoid: elementwise logistic. minmax: affine rescale over the vector; a
// constant vector maps to all 0.5. NaN input raises DomainError.
std::vector<double> normalize(std::span<const double> raw, NormalizeKind kind);

}  // namespace cqda
