#include "cqda/query.hpp"

#include <cctype>
#include <functional>

#include "cqda/errors.hpp"

namespace cqda {

namespace {

bool is_reserved(char c) {
    return c == '?' || c == ':' || c == '&' || c == '|' || c == '!' || c == '(' || c == ')' ||
           c == ',';
}

bool is_variable_name(const std::string& name) {
    return !name.empty() && name[0] >= 'A' && name[0] <= 'Z';
}

class Parser {
public:
    explicit Parser(const std::string& text) : text_(text) {}

    QueryAst parse() {
        expect('?');
        std::string target = ident("target variable");
        if (!is_variable_name(target)) {
            throw ParseError("target must be a variable (uppercase first letter): " + target,
                             pos_);
        }
        expect(':');
        QExpr body = expr();
        skip_ws();
        if (pos_ != text_.size()) throw ParseError("trailing input after query", pos_);
        QueryAst ast{target, std::move(body)};
        validate_target(ast);
        return ast;
    }

private:
    // AND/OR are associative; nested same-kind nodes (from parentheses) are
    // flattened so the canonical print form round-trips to the same tree.
    static void append_flattened(std::vector<QExpr>& out, QExpr child, QExpr::Kind kind) {
        if (child.kind == kind) {
            for (auto& grandchild : child.children) out.push_back(std::move(grandchild));
        } else {
            out.push_back(std::move(child));
        }
    }

    QExpr expr() {
        std::vector<QExpr> terms;
        append_flattened(terms, term(), QExpr::Kind::disj);
        while (peek() == '|') {
            ++pos_;
            append_flattened(terms, term(), QExpr::Kind::disj);
        }
        if (terms.size() == 1) return std::move(terms[0]);
        QExpr e;
        e.kind = QExpr::Kind::disj;
        e.children = std::move(terms);
        return e;
    }

    QExpr term() {
        std::vector<QExpr> factors;
        append_flattened(factors, factor(), QExpr::Kind::conj);
        while (peek() == '&') {
            ++pos_;
            append_flattened(factors, factor(), QExpr::Kind::conj);
        }
        if (factors.size() == 1) return std::move(factors[0]);
        QExpr e;
        e.kind = QExpr::Kind::conj;
        e.children = std::move(factors);
        return e;
    }

    QExpr factor() {
        skip_ws();
        if (peek() == '!') {
            std::size_t bang = pos_;
            ++pos_;
            skip_ws();
            if (peek() == '(') throw ParseError("negation is atomic-only", bang);
            QExpr e;
            e.kind = QExpr::Kind::negated_atom;
            e.atom = atom();
            return e;
        }
        if (peek() == '(') {
            ++pos_;
            QExpr e = expr();
            expect(')');
            return e;
        }
        QExpr e;
        e.kind = QExpr::Kind::atom;
        e.atom = atom();
        return e;
    }

    QAtom atom() {
        QAtom a;
        a.relation = ident("relation name");
        expect('(');
        a.lhs = arg();
        expect(',');
        a.rhs = arg();
        expect(')');
        return a;
    }

    QTerm arg() {
        std::string name = ident("atom argument");
        return QTerm{name, is_variable_name(name)};
    }

    std::string ident(const char* what) {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
               !is_reserved(text_[pos_])) {
            ++pos_;
        }
        if (pos_ == start) {
            throw ParseError(std::string("expected ") + what, start);
        }
        return text_.substr(start, pos_ - start);
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != c) {
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
        ++pos_;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    void validate_target(const QueryAst& ast) {
        bool found = false;
        std::function<void(const QExpr&)> walk = [&](const QExpr& e) {
            if (e.kind == QExpr::Kind::atom || e.kind == QExpr::Kind::negated_atom) {
                if ((e.atom.lhs.is_variable && e.atom.lhs.name == ast.target) ||
                    (e.atom.rhs.is_variable && e.atom.rhs.name == ast.target)) {
                    found = true;
                }
                return;
            }
            for (const auto& c : e.children) walk(c);
        };
        walk(ast.body);
        if (!found) {
            throw ParseError("target variable " + ast.target + " does not occur in the body", 0);
        }
    }

    const std::string& text_;
    std::size_t pos_ = 0;
};

std::string print_atom(const QAtom& a) {
    return a.relation + "(" + a.lhs.name + "," + a.rhs.name + ")";
}

void print_expr_into(const QExpr& e, std::string& out, bool parenthesize_disj) {
    switch (e.kind) {
        case QExpr::Kind::atom:
            out += print_atom(e.atom);
            break;
        case QExpr::Kind::negated_atom:
            out += "!";
            out += print_atom(e.atom);
            break;
        case QExpr::Kind::conj:
            for (std::size_t i = 0; i < e.children.size(); ++i) {
                if (i > 0) out += " & ";
                print_expr_into(e.children[i], out, /*parenthesize_disj=*/true);
            }
            break;
        case QExpr::Kind::disj: {
            if (parenthesize_disj) out += "(";
            for (std::size_t i = 0; i < e.children.size(); ++i) {
                if (i > 0) out += " | ";
                print_expr_into(e.children[i], out, /*parenthesize_disj=*/false);
            }
            if (parenthesize_disj) out += ")";
            break;
        }
    }
}

}  // namespace

QueryAst parse_query(const std::string& text) { return Parser(text).parse(); }

std::string print_expr(const QExpr& expr) {
    std::string out;
    print_expr_into(expr, out, false);
    return out;
}

std::string print_query(const QueryAst& ast) {
    return "?" + ast.target + " : " + print_expr(ast.body);
}

}  // namespace cqda
