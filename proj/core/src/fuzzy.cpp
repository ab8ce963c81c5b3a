#include "cqda/fuzzy.hpp"

#include <algorithm>
#include <cmath>

#include "cqda/errors.hpp"

namespace cqda {

namespace {

constexpr double kDomainTol = 1e-9;

double checked_unit(double x, const char* what) {
    if (!(x >= -kDomainTol && x <= 1.0 + kDomainTol)) {
        throw DomainError(std::string(what) + " outside [0,1]: " + std::to_string(x));
    }
    return std::clamp(x, 0.0, 1.0);
}

}  // namespace

TNormKind tnorm_from_string(const std::string& name) {
    if (name == "godel") return TNormKind::godel;
    if (name == "product") return TNormKind::product;
    if (name == "lukasiewicz") return TNormKind::lukasiewicz;
    throw ConfigError("unknown t-norm: " + name);
}

NegationKind negation_from_string(const std::string& name) {
    if (name == "standard") return NegationKind::standard;
    if (name == "cosine") return NegationKind::strict_cosine;
    throw ConfigError("unknown negation: " + name);
}

std::string to_string(TNormKind k) {
    switch (k) {
        case TNormKind::godel: return "godel";
        case TNormKind::product: return "product";
        case TNormKind::lukasiewicz: return "lukasiewicz";
    }
    return "?";
}

std::string to_string(NegationKind k) {
    return k == NegationKind::standard ? "standard" : "cosine";
}

double tnorm(const FuzzyConfig& cfg, double x, double y) {
    x = checked_unit(x, "t-norm input");
    y = checked_unit(y, "t-norm input");
    switch (cfg.tnorm) {
        case TNormKind::godel: return std::min(x, y);
        case TNormKind::product: return x * y;
        case TNormKind::lukasiewicz: return std::max(0.0, x + y - 1.0);
    }
    return 0.0;
}

double tconorm(const FuzzyConfig& cfg, double x, double y) {
    x = checked_unit(x, "t-conorm input");
    y = checked_unit(y, "t-conorm input");
    // Dual by construction: De Morgan holds exactly.
    return 1.0 - tnorm(cfg, 1.0 - x, 1.0 - y);
}

double negate(const FuzzyConfig& cfg, double x) {
    x = checked_unit(x, "negation input");
    switch (cfg.negation) {
        case NegationKind::standard: return 1.0 - x;
        case NegationKind::strict_cosine: return 0.5 * (1.0 + std::cos(M_PI * x));
    }
    return 0.0;
}

double tnorm_fold(const FuzzyConfig& cfg, std::span<const double> xs) {
    double acc = 1.0;
    for (double x : xs) acc = tnorm(cfg, acc, x);
    return acc;
}

double tconorm_fold(const FuzzyConfig& cfg, std::span<const double> xs) {
    double acc = 0.0;
    for (double x : xs) acc = tconorm(cfg, acc, x);
    return acc;
}

}  // namespace cqda
