#pragma once

#include <span>
#include <string>

namespace cqda {

enum class TNormKind { godel, product, lukasiewicz };
enum class NegationKind { standard, strict_cosine };

// Selects the conjunction/negation relaxations used to aggregate atom scores.
// The disjunction is always the dual t-conorm of the selected t-norm.
struct FuzzyConfig {
    TNormKind tnorm = TNormKind::product;
    NegationKind negation = NegationKind::standard;
};

TNormKind tnorm_from_string(const std::string& name);
NegationKind negation_from_string(const std::string& name);
std::string to_string(TNormKind k);
std::string to_string(NegationKind k);

// All inputs must lie in [0,1] up to tolerance 1e-9; values inside the
// tolerance band are clamped, values outside raise DomainError.
double tnorm(const FuzzyConfig& cfg, double x, double y);
double tconorm(const FuzzyConfig& cfg, double x, double y);
double negate(const FuzzyConfig& cfg, double x);

// Left folds over a score sequence. Empty input returns the identity
// element (1 for the t-norm, 0 for the t-conorm).
double tnorm_fold(const FuzzyConfig& cfg, std::span<const double> xs);
double tconorm_fold(const FuzzyConfig& cfg, std::span<const double> xs);

}  // namespace cqda
