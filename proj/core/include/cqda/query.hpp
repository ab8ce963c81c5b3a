#pragma once

#include <string>
#include <vector>

namespace cqda {

// Atom argument: a variable (identifier starting with an uppercase ASCII
// letter) or an anchor entity label (anything else).
struct QTerm {
    std::string name;
    bool is_variable = false;
    bool operator==(const QTerm&) const = default;
};

struct QAtom {
    std::string relation;
    QTerm lhs;
    QTerm rhs;
    bool operator==(const QAtom&) const = default;
};

// Body expression. Negation is atomic-only, so `negated_atom` is a leaf.
struct QExpr {
    enum class Kind { atom, negated_atom, conj, disj };
    Kind kind = Kind::atom;
    QAtom atom;                   // atom / negated_atom
    std::vector<QExpr> children;  // conj / disj, in source order
    bool operator==(const QExpr&) const = default;
};

struct QueryAst {
    std::string target;
    QExpr body;
    bool operator==(const QueryAst&) const = default;
};

// Grammar:
//   query  := "?" VAR ":" expr
//   expr   := term ("|" term)*
//   term   := factor ("&" factor)*
//   factor := ["!"] atom | "(" expr ")"
//   atom   := IDENT "(" arg "," arg ")"
// IDENT is a maximal run of non-whitespace characters outside ?:&|!(),.
// Whitespace-insensitive. Errors carry the byte offset.
QueryAst parse_query(const std::string& text);

// Canonical text form; parse(print(ast)) == ast.
std::string print_query(const QueryAst& ast);
std::string print_expr(const QExpr& expr);

}  // namespace cqda
