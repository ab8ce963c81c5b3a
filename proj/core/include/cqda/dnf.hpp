#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cqda/query.hpp"

namespace cqda {

struct Literal {
    QAtom atom;
    bool negated = false;
    bool operator==(const Literal&) const = default;
};

struct Conjunct {
    std::vector<Literal> literals;
    bool operator==(const Conjunct&) const = default;
};

// Disjunction of conjuncts over (possibly negated) atoms. Valid when every
// disjunct is nonempty, mentions the target, and every negated literal's
// variables also occur in a positive literal of the same disjunct.
struct DnfQuery {
    std::string target;
    std::vector<Conjunct> disjuncts;
    bool operator==(const DnfQuery&) const = default;
};

inline constexpr std::size_t kDefaultDnfCap = 64;

// Distributes AND over OR; keeps duplicates and left-to-right literal order.
// Throws BudgetError when the disjunct count exceeds `cap`.
DnfQuery to_dnf(const QueryAst& ast, std::size_t cap = kDefaultDnfCap);

// Structural validity (throws ContractError with the violated rule).
void validate_dnf(const DnfQuery& q);

QueryAst dnf_to_ast(const DnfQuery& q);
std::string print_dnf(const DnfQuery& q);

// Edge of a per-disjunct dependency DAG: argument 1 -> argument 2 of one
// literal, labeled by relation and negation flag.
struct DepEdge {
    std::size_t literal;  // index into the conjunct
    QTerm src;
    QTerm dst;
    std::string relation;
    bool negated;
};

struct DisjunctDag {
    std::vector<std::string> anchors;    // unique, first-appearance order
    std::vector<std::string> variables;  // unique, first-appearance order
    std::vector<DepEdge> edges;          // literal order
    // Execution order for the variables; respects every edge, target last.
    std::vector<std::string> topo_order;
};

struct DependencyGraph {
    std::vector<DisjunctDag> disjuncts;
};

// Validates acyclicity, anchors-as-sources, unique target sink, and that
// every variable is reachable from an anchor through positive edges (negated
// literals never ground candidates).
DependencyGraph dependency_graph(const DnfQuery& q);

// The 14 named query shapes plus `other`.
enum class Structure : std::uint8_t {
    s1p, s2p, s3p, s2i, s3i, spi, sip, s2u, sup,
    s2in, s3in, sinp, spin, spni, other
};

constexpr std::size_t kStructureCount = 14;

const std::vector<Structure>& all_structures();
const std::vector<Structure>& epfo_structures();      // 1p..up (9)
const std::vector<Structure>& negation_structures();  // 2in..pni (5)

std::string to_string(Structure s);
Structure structure_from_string(const std::string& name);
bool is_negation_structure(Structure s);

// Matches the literal/edge pattern against the named templates up to
// relabeling of relations and anchors and reordering of conjuncts/literals.
Structure classify_structure(const DnfQuery& q);

// Abstract literal of a structure template. Symbol encoding: dst/src >= 0 is
// a bound variable id, -1 is the target, <= -2 is anchor number -(sym+2).
struct TemplateLiteral {
    int rel;
    int src;
    int dst;
    bool negated;
};

constexpr int kTemplateTarget = -1;
constexpr int template_anchor(int k) { return -(k + 2); }
constexpr bool template_is_target(int sym) { return sym == kTemplateTarget; }
constexpr bool template_is_anchor(int sym) { return sym <= -2; }
constexpr int template_anchor_index(int sym) { return -(sym + 2); }

struct StructureTemplate {
    Structure name;
    std::vector<std::vector<TemplateLiteral>> disjuncts;
};

const StructureTemplate& structure_template(Structure s);

}  // namespace cqda
