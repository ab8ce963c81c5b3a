#include "cqda/dnf.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "cqda/errors.hpp"

namespace cqda {

namespace {

std::vector<Conjunct> expr_to_dnf(const QExpr& e, std::size_t cap) {
    switch (e.kind) {
        case QExpr::Kind::atom:
            return {Conjunct{{Literal{e.atom, false}}}};
        case QExpr::Kind::negated_atom:
            return {Conjunct{{Literal{e.atom, true}}}};
        case QExpr::Kind::disj: {
            std::vector<Conjunct> out;
            for (const auto& child : e.children) {
                auto sub = expr_to_dnf(child, cap);
                out.insert(out.end(), sub.begin(), sub.end());
                if (out.size() > cap) {
                    throw BudgetError("DNF blow-up: more than " + std::to_string(cap) +
                                      " disjuncts");
                }
            }
            return out;
        }
        case QExpr::Kind::conj: {
            // Cartesian product; leftmost child varies slowest.
            std::vector<Conjunct> acc{Conjunct{}};
            for (const auto& child : e.children) {
                auto sub = expr_to_dnf(child, cap);
                std::vector<Conjunct> next;
                next.reserve(acc.size() * sub.size());
                for (const auto& a : acc) {
                    for (const auto& b : sub) {
                        Conjunct c = a;
                        c.literals.insert(c.literals.end(), b.literals.begin(),
                                          b.literals.end());
                        next.push_back(std::move(c));
                    }
                }
                if (next.size() > cap) {
                    throw BudgetError("DNF blow-up: more than " + std::to_string(cap) +
                                      " disjuncts");
                }
                acc = std::move(next);
            }
            return acc;
        }
    }
    return {};
}

}  // namespace

DnfQuery to_dnf(const QueryAst& ast, std::size_t cap) {
    DnfQuery q;
    q.target = ast.target;
    q.disjuncts = expr_to_dnf(ast.body, cap);
    validate_dnf(q);
    return q;
}

void validate_dnf(const DnfQuery& q) {
    if (q.disjuncts.empty()) throw ContractError("DNF query has no disjuncts");
    for (const auto& conj : q.disjuncts) {
        if (conj.literals.empty()) throw ContractError("empty conjunct in DNF query");
        std::unordered_set<std::string> positive_vars;
        bool target_seen = false;
        for (const auto& lit : conj.literals) {
            for (const QTerm* t : {&lit.atom.lhs, &lit.atom.rhs}) {
                if (!t->is_variable) continue;
                if (t->name == q.target) target_seen = true;
                if (!lit.negated) positive_vars.insert(t->name);
            }
        }
        if (!target_seen) {
            throw ContractError("disjunct does not constrain the target variable " + q.target);
        }
        for (const auto& lit : conj.literals) {
            if (!lit.negated) continue;
            for (const QTerm* t : {&lit.atom.lhs, &lit.atom.rhs}) {
                if (t->is_variable && positive_vars.count(t->name) == 0) {
                    throw ContractError("variable " + t->name +
                                        " is constrained only by negations in its conjunct");
                }
            }
        }
    }
}

QueryAst dnf_to_ast(const DnfQuery& q) {
    auto conj_expr = [](const Conjunct& c) {
        std::vector<QExpr> lits;
        lits.reserve(c.literals.size());
        for (const auto& lit : c.literals) {
            QExpr e;
            e.kind = lit.negated ? QExpr::Kind::negated_atom : QExpr::Kind::atom;
            e.atom = lit.atom;
            lits.push_back(std::move(e));
        }
        if (lits.size() == 1) return std::move(lits[0]);
        QExpr e;
        e.kind = QExpr::Kind::conj;
        e.children = std::move(lits);
        return e;
    };
    QueryAst ast;
    ast.target = q.target;
    if (q.disjuncts.size() == 1) {
        ast.body = conj_expr(q.disjuncts[0]);
    } else {
        ast.body.kind = QExpr::Kind::disj;
        for (const auto& c : q.disjuncts) ast.body.children.push_back(conj_expr(c));
    }
    return ast;
}

std::string print_dnf(const DnfQuery& q) { return print_query(dnf_to_ast(q)); }

DependencyGraph dependency_graph(const DnfQuery& q) {
    validate_dnf(q);
    DependencyGraph graph;
    for (const auto& conj : q.disjuncts) {
        DisjunctDag dag;
        auto note_term = [&](const QTerm& t) {
            auto& list = t.is_variable ? dag.variables : dag.anchors;
            if (std::find(list.begin(), list.end(), t.name) == list.end()) {
                list.push_back(t.name);
            }
        };
        for (std::size_t i = 0; i < conj.literals.size(); ++i) {
            const auto& lit = conj.literals[i];
            if (!lit.atom.rhs.is_variable) {
                throw ContractError("anchor " + lit.atom.rhs.name +
                                    " used as atom object; anchors must be source nodes");
            }
            if (lit.atom.lhs == lit.atom.rhs) {
                throw ContractError("atom endpoints must differ: " + lit.atom.relation);
            }
            note_term(lit.atom.lhs);
            note_term(lit.atom.rhs);
            dag.edges.push_back(DepEdge{i, lit.atom.lhs, lit.atom.rhs, lit.atom.relation,
                                        lit.negated});
        }

        // Cycle check over variable-to-variable edges (anchors cannot close a
        // cycle; they are validated as sources above).
        {
            std::unordered_map<std::string, std::size_t> indegree;
            for (const auto& v : dag.variables) indegree[v] = 0;
            for (const auto& e : dag.edges) {
                if (e.src.is_variable) ++indegree[e.dst.name];
            }
            std::vector<std::string> queue;
            for (const auto& v : dag.variables) {
                if (indegree[v] == 0) queue.push_back(v);
            }
            std::size_t placed = 0;
            while (!queue.empty()) {
                std::string v = queue.back();
                queue.pop_back();
                ++placed;
                for (const auto& e : dag.edges) {
                    if (e.src.is_variable && e.src.name == v && --indegree[e.dst.name] == 0) {
                        queue.push_back(e.dst.name);
                    }
                }
            }
            if (placed != dag.variables.size()) {
                throw ContractError("cycle detected in the dependency graph");
            }
        }

        // Positive reachability from anchors: negated literals never generate
        // candidate bindings, so grounding needs a positive path.
        std::unordered_set<std::string> reached;
        bool grew = true;
        while (grew) {
            grew = false;
            for (const auto& e : dag.edges) {
                if (e.negated) continue;
                bool src_ok = !e.src.is_variable || reached.count(e.src.name) > 0;
                if (src_ok && reached.insert(e.dst.name).second) grew = true;
            }
        }
        for (const auto& v : dag.variables) {
            if (reached.count(v) == 0) {
                throw ContractError("variable " + v +
                                    " is not reachable from any anchor via positive atoms");
            }
        }

        // Unique sink check: the target is the only variable with no
        // outgoing edge.
        std::unordered_set<std::string> has_out;
        for (const auto& e : dag.edges) {
            if (e.src.is_variable) has_out.insert(e.src.name);
        }
        for (const auto& v : dag.variables) {
            if (v != q.target && has_out.count(v) == 0) {
                throw ContractError("variable " + v + " is a sink; target " + q.target +
                                    " must be the unique sink");
            }
        }
        if (has_out.count(q.target) > 0) {
            throw ContractError("target " + q.target + " has outgoing edges; it must be a sink");
        }

        // Deterministic Kahn order over all edges; target is scheduled last.
        std::unordered_map<std::string, std::vector<std::string>> preds;
        for (const auto& e : dag.edges) {
            if (e.src.is_variable) preds[e.dst.name].push_back(e.src.name);
        }
        std::unordered_set<std::string> placed;
        while (dag.topo_order.size() < dag.variables.size()) {
            const std::string* pick = nullptr;
            for (const auto& v : dag.variables) {
                if (placed.count(v) > 0) continue;
                bool ready = true;
                for (const auto& p : preds[v]) {
                    if (placed.count(p) == 0) {
                        ready = false;
                        break;
                    }
                }
                if (!ready) continue;
                if (v == q.target && dag.topo_order.size() + 1 < dag.variables.size()) {
                    continue;  // defer the target while other variables remain
                }
                pick = &v;
                break;
            }
            if (pick == nullptr) {
                throw ContractError("cycle detected in the dependency graph");
            }
            placed.insert(*pick);
            dag.topo_order.push_back(*pick);
        }
        graph.disjuncts.push_back(std::move(dag));
    }
    return graph;
}

namespace {

constexpr int T = kTemplateTarget;
constexpr int anchor(int k) { return template_anchor(k); }

const std::vector<StructureTemplate>& templates() {
    static const std::vector<StructureTemplate> t = {
        {Structure::s1p, {{{0, anchor(0), T, false}}}},
        {Structure::s2p, {{{0, anchor(0), 0, false}, {1, 0, T, false}}}},
        {Structure::s3p,
         {{{0, anchor(0), 0, false}, {1, 0, 1, false}, {2, 1, T, false}}}},
        {Structure::s2i, {{{0, anchor(0), T, false}, {1, anchor(1), T, false}}}},
        {Structure::s3i,
         {{{0, anchor(0), T, false}, {1, anchor(1), T, false}, {2, anchor(2), T, false}}}},
        {Structure::spi,
         {{{0, anchor(0), 0, false}, {1, 0, T, false}, {2, anchor(1), T, false}}}},
        {Structure::sip,
         {{{0, anchor(0), 0, false}, {1, anchor(1), 0, false}, {2, 0, T, false}}}},
        {Structure::s2u, {{{0, anchor(0), T, false}}, {{1, anchor(1), T, false}}}},
        // Union-then-project: the projection relation is shared.
        {Structure::sup,
         {{{0, anchor(0), 0, false}, {2, 0, T, false}},
          {{1, anchor(1), 0, false}, {2, 0, T, false}}}},
        {Structure::s2in, {{{0, anchor(0), T, false}, {1, anchor(1), T, true}}}},
        {Structure::s3in,
         {{{0, anchor(0), T, false}, {1, anchor(1), T, false}, {2, anchor(2), T, true}}}},
        {Structure::sinp,
         {{{0, anchor(0), 0, false}, {1, anchor(1), 0, true}, {2, 0, T, false}}}},
        {Structure::spin,
         {{{0, anchor(0), 0, false}, {1, 0, T, false}, {2, anchor(1), T, true}}}},
        {Structure::spni,
         {{{0, anchor(0), 0, false}, {1, 0, T, true}, {2, anchor(1), T, false}}}},
    };
    return t;
}

struct Bindings {
    std::map<int, std::string> rel;      // template relation -> query label
    std::map<int, std::string> anchors;  // template anchor -> query label
    std::map<int, std::string> vars;     // template variable -> query variable
    std::set<std::string> used_vars;     // keeps the variable map injective
};

bool bind(std::map<int, std::string>& m, int sym, const std::string& value) {
    auto it = m.find(sym);
    if (it != m.end()) return it->second == value;
    m.emplace(sym, value);
    return true;
}

bool bind_term(Bindings& b, int sym, const QTerm& term, const std::string& target) {
    if (sym == T) return term.is_variable && term.name == target;
    if (sym < 0) {  // anchor symbol
        return !term.is_variable && bind(b.anchors, -(sym + 2), term.name);
    }
    if (!term.is_variable || term.name == target) return false;
    auto it = b.vars.find(sym);
    if (it != b.vars.end()) return it->second == term.name;
    if (b.used_vars.count(term.name) > 0) return false;  // variables map injectively
    b.vars.emplace(sym, term.name);
    b.used_vars.insert(term.name);
    return true;
}

bool match_literal(Bindings& b, const TemplateLiteral& tl, const Literal& lit, const std::string& target) {
    if (tl.negated != lit.negated) return false;
    if (!bind(b.rel, tl.rel, lit.atom.relation)) return false;
    if (!bind_term(b, tl.src, lit.atom.lhs, target)) return false;
    return bind_term(b, tl.dst, lit.atom.rhs, target);
}

bool match_conjunct(const Bindings& base, Bindings& out, const std::vector<TemplateLiteral>& tmpl,
                    const Conjunct& conj, const std::string& target) {
    if (tmpl.size() != conj.literals.size()) return false;
    std::vector<std::size_t> perm(tmpl.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end());
    do {
        Bindings b = base;
        bool ok = true;
        for (std::size_t i = 0; i < tmpl.size(); ++i) {
            if (!match_literal(b, tmpl[i], conj.literals[perm[i]], target)) {
                ok = false;
                break;
            }
        }
        if (ok) {
            out = std::move(b);
            return true;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

bool match_template(const StructureTemplate& tmpl, const DnfQuery& q) {
    if (tmpl.disjuncts.size() != q.disjuncts.size()) return false;
    std::vector<std::size_t> perm(tmpl.disjuncts.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    do {
        Bindings b;
        bool ok = true;
        for (std::size_t i = 0; i < tmpl.disjuncts.size(); ++i) {
            Bindings next;
            if (!match_conjunct(b, next, tmpl.disjuncts[i], q.disjuncts[perm[i]], q.target)) {
                ok = false;
                break;
            }
            b = std::move(next);
        }
        if (ok) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

}  // namespace

const std::vector<Structure>& all_structures() {
    static const std::vector<Structure> s = {
        Structure::s1p, Structure::s2p, Structure::s3p, Structure::s2i, Structure::s3i,
        Structure::spi, Structure::sip, Structure::s2u, Structure::sup, Structure::s2in,
        Structure::s3in, Structure::sinp, Structure::spin, Structure::spni};
    return s;
}

const std::vector<Structure>& epfo_structures() {
    static const std::vector<Structure> s = {
        Structure::s1p, Structure::s2p, Structure::s3p, Structure::s2i, Structure::s3i,
        Structure::spi, Structure::sip, Structure::s2u, Structure::sup};
    return s;
}

const std::vector<Structure>& negation_structures() {
    static const std::vector<Structure> s = {Structure::s2in, Structure::s3in, Structure::sinp,
                                             Structure::spin, Structure::spni};
    return s;
}

std::string to_string(Structure s) {
    switch (s) {
        case Structure::s1p: return "1p";
        case Structure::s2p: return "2p";
        case Structure::s3p: return "3p";
        case Structure::s2i: return "2i";
        case Structure::s3i: return "3i";
        case Structure::spi: return "pi";
        case Structure::sip: return "ip";
        case Structure::s2u: return "2u";
        case Structure::sup: return "up";
        case Structure::s2in: return "2in";
        case Structure::s3in: return "3in";
        case Structure::sinp: return "inp";
        case Structure::spin: return "pin";
        case Structure::spni: return "pni";
        case Structure::other: return "other";
    }
    return "?";
}

Structure structure_from_string(const std::string& name) {
    for (Structure s : all_structures()) {
        if (to_string(s) == name) return s;
    }
    if (name == "other") return Structure::other;
    throw ConfigError("unknown query structure: " + name);
}

bool is_negation_structure(Structure s) {
    const auto& neg = negation_structures();
    return std::find(neg.begin(), neg.end(), s) != neg.end();
}

Structure classify_structure(const DnfQuery& q) {
    for (const auto& tmpl : templates()) {
        if (match_template(tmpl, q)) return tmpl.name;
    }
    return Structure::other;
}

const StructureTemplate& structure_template(Structure s) {
    for (const auto& tmpl : templates()) {
        if (tmpl.name == s) return tmpl;
    }
    throw ConfigError("no template for structure " + to_string(s));
}

}  // namespace cqda
