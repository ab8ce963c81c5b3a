#include "cqda/generator.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "cqda/errors.hpp"
#include "cqda/io_util.hpp"

namespace cqda {

namespace {

using json = nlohmann::json;

// Per-attempt symbol bindings. Relation and anchor bindings persist across
// disjuncts (shared template symbols, e.g. the up projection); variable
// values are existential per disjunct.
struct Grounding {
    std::map<int, RelationId> rels;
    std::map<int, EntityId> anchors;
    std::map<int, EntityId> vars;  // current disjunct only
    EntityId target = -1;
};

class Sampler {
public:
    Sampler(const TripleStore& full, Rng& rng)
        : full_(full), rng_(rng), n_entities_(full.min_entity_count()) {
        by_object_.resize(static_cast<std::size_t>(full.min_entity_count()));
        by_relation_.resize(static_cast<std::size_t>(full.min_relation_count()));
        const auto& ts = full.triples();
        for (std::size_t i = 0; i < ts.size(); ++i) {
            by_object_[static_cast<std::size_t>(ts[i].o)].push_back(i);
            by_relation_[static_cast<std::size_t>(ts[i].p)].push_back(i);
        }
    }

    // Grounds every disjunct of the template backward from fresh seed
    // answers. Returns false when a sampling step finds no support.
    bool attempt(const StructureTemplate& tmpl, Grounding& g) {
        g = Grounding{};
        for (const auto& disjunct : tmpl.disjuncts) {
            g.vars.clear();
            g.target = uniform_entity();
            if (!ground_disjunct(disjunct, g)) return false;
        }
        return true;
    }

private:
    EntityId uniform_entity() {
        return static_cast<EntityId>(rng_.uniform_int(n_entities_));
    }

    EntityId value_of(const Grounding& g, int sym) const {
        if (template_is_target(sym)) return g.target;
        if (template_is_anchor(sym)) return g.anchors.at(template_anchor_index(sym));
        return g.vars.at(sym);
    }

    bool is_bound(const Grounding& g, int sym) const {
        if (template_is_target(sym)) return true;
        if (template_is_anchor(sym)) return g.anchors.count(template_anchor_index(sym)) > 0;
        return g.vars.count(sym) > 0;
    }

    void bind(Grounding& g, int sym, EntityId value) {
        if (template_is_anchor(sym)) {
            g.anchors[template_anchor_index(sym)] = value;
        } else {
            g.vars[sym] = value;
        }
    }

    bool ground_disjunct(const std::vector<TemplateLiteral>& lits, Grounding& g) {
        std::vector<bool> done(lits.size(), false);
        std::size_t remaining = lits.size();
        while (remaining > 0) {
            // Pick the next literal with a bound destination, positives first
            // so negated edges can reuse already-grounded endpoints.
            std::size_t pick = lits.size();
            for (std::size_t pass = 0; pass < 2 && pick == lits.size(); ++pass) {
                for (std::size_t i = 0; i < lits.size(); ++i) {
                    if (done[i] || lits[i].negated != (pass == 1)) continue;
                    if (is_bound(g, lits[i].dst)) {
                        pick = i;
                        break;
                    }
                }
            }
            if (pick == lits.size()) return false;  // malformed template
            if (!ground_literal(lits[pick], g)) return false;
            done[pick] = true;
            --remaining;
        }
        // Degenerate groundings (two identical literals) make the structure
        // collapse into a smaller one; resample instead.
        for (std::size_t i = 0; i < lits.size(); ++i) {
            for (std::size_t j = i + 1; j < lits.size(); ++j) {
                if (lits[i].negated == lits[j].negated &&
                    g.rels.at(lits[i].rel) == g.rels.at(lits[j].rel) &&
                    value_of(g, lits[i].src) == value_of(g, lits[j].src) &&
                    same_node(g, lits[i].dst, lits[j].dst)) {
                    return false;
                }
            }
        }
        return true;
    }

    bool same_node(const Grounding& g, int a, int b) const {
        bool at = template_is_target(a), bt = template_is_target(b);
        if (at || bt) return at && bt;
        if (template_is_anchor(a) != template_is_anchor(b)) return false;
        if (template_is_anchor(a)) return value_of(g, a) == value_of(g, b);
        return a == b;  // variables are distinct template nodes
    }

    bool ground_literal(const TemplateLiteral& lit, Grounding& g) {
        EntityId y = value_of(g, lit.dst);
        bool rel_bound = g.rels.count(lit.rel) > 0;
        bool src_bound = is_bound(g, lit.src);
        if (lit.negated) return ground_negated(lit, g, y, rel_bound, src_bound);

        if (rel_bound && src_bound) {
            return full_.contains(value_of(g, lit.src), g.rels.at(lit.rel), y);
        }
        if (rel_bound) {
            const auto& subjects =
                full_.neighbors(y, g.rels.at(lit.rel), Direction::inverse);
            if (subjects.empty()) return false;
            bind(g, lit.src, subjects[static_cast<std::size_t>(
                                 rng_.uniform_int(static_cast<std::int64_t>(subjects.size())))]);
            return true;
        }
        const auto& incoming = by_object_[static_cast<std::size_t>(y)];
        if (incoming.empty()) return false;
        const Triple& t = full_.triples()[incoming[static_cast<std::size_t>(
            rng_.uniform_int(static_cast<std::int64_t>(incoming.size())))]];
        if (src_bound && value_of(g, lit.src) != t.s) {
            // A pre-bound source with an unbound relation: fall back to
            // scanning the incoming edges of y for that source.
            EntityId s = value_of(g, lit.src);
            std::vector<RelationId> rels;
            for (std::size_t idx : incoming) {
                if (full_.triples()[idx].s == s) rels.push_back(full_.triples()[idx].p);
            }
            if (rels.empty()) return false;
            g.rels[lit.rel] = rels[static_cast<std::size_t>(
                rng_.uniform_int(static_cast<std::int64_t>(rels.size())))];
            return true;
        }
        g.rels[lit.rel] = t.p;
        if (!src_bound) bind(g, lit.src, t.s);
        return true;
    }

    // Samples (relation, source) pairs that exist somewhere in the graph but
    // not toward y, so the negated atom excludes a real pattern.
    bool ground_negated(const TemplateLiteral& lit, Grounding& g, EntityId y, bool rel_bound,
                        bool src_bound) {
        for (int tries = 0; tries < 64; ++tries) {
            RelationId p;
            EntityId s;
            if (rel_bound && src_bound) {
                p = g.rels.at(lit.rel);
                s = value_of(g, lit.src);
                if (full_.contains(s, p, y)) return false;
                return true;
            }
            if (rel_bound) {
                p = g.rels.at(lit.rel);
                const auto& pool = by_relation_[static_cast<std::size_t>(p)];
                if (pool.empty()) return false;
                s = full_.triples()[pool[static_cast<std::size_t>(rng_.uniform_int(
                                        static_cast<std::int64_t>(pool.size())))]]
                        .s;
            } else {
                const auto& ts = full_.triples();
                const Triple& t = ts[static_cast<std::size_t>(
                    rng_.uniform_int(static_cast<std::int64_t>(ts.size())))];
                p = t.p;
                s = src_bound ? value_of(g, lit.src) : t.s;
            }
            if (full_.contains(s, p, y)) continue;
            g.rels[lit.rel] = p;
            if (!src_bound) bind(g, lit.src, s);
            return true;
        }
        return false;
    }

    const TripleStore& full_;
    Rng& rng_;
    std::int64_t n_entities_;
    std::vector<std::vector<std::size_t>> by_object_;
    std::vector<std::vector<std::size_t>> by_relation_;
};

DnfQuery build_query(const StructureTemplate& tmpl, const Grounding& g, const Vocab& vocab) {
    DnfQuery q;
    q.target = "T";
    auto term_of = [&](int sym) {
        if (template_is_target(sym)) return QTerm{"T", true};
        if (template_is_anchor(sym)) {
            return QTerm{vocab.entity_label(g.anchors.at(template_anchor_index(sym))), false};
        }
        return QTerm{"V" + std::to_string(sym + 1), true};
    };
    for (const auto& disjunct : tmpl.disjuncts) {
        Conjunct c;
        for (const auto& lit : disjunct) {
            QAtom atom;
            atom.relation = vocab.relation_label(g.rels.at(lit.rel));
            atom.lhs = term_of(lit.src);
            atom.rhs = term_of(lit.dst);
            c.literals.push_back(Literal{std::move(atom), lit.negated});
        }
        q.disjuncts.push_back(std::move(c));
    }
    return q;
}

}  // namespace

namespace {

std::optional<QueryInstance> instantiate_impl(Sampler& sampler, const TripleStore& full,
                                              const TripleStore& observed, const Vocab& vocab,
                                              Structure structure, const GenConfig& cfg) {
    const StructureTemplate& tmpl = structure_template(structure);
    Grounding g;
    bool grounded = false;
    for (std::size_t tries = 0; tries < cfg.retry_budget; ++tries) {
        if (sampler.attempt(tmpl, g)) {
            grounded = true;
            break;
        }
    }
    if (!grounded) {
        throw BudgetError("query generation exhausted after " +
                          std::to_string(cfg.retry_budget) + " attempts for structure " +
                          to_string(structure));
    }

    DnfQuery dnf = build_query(tmpl, g, vocab);
    auto answers_full = answer_exact_capped(full, vocab, dnf, cfg.max_answers);
    if (!answers_full.has_value()) return std::nullopt;  // answer cap exceeded
    auto answers_obs = answer_exact_capped(observed, vocab, dnf, cfg.max_answers);
    if (!answers_obs.has_value()) return std::nullopt;

    QueryInstance inst;
    inst.query = dnf_to_ast(dnf);
    inst.structure = structure;
    inst.easy.assign(answers_obs->begin(), answers_obs->end());
    std::set_difference(answers_full->begin(), answers_full->end(), answers_obs->begin(),
                        answers_obs->end(), std::back_inserter(inst.hard));
    if (cfg.require_hard && inst.hard.empty()) return std::nullopt;
    if (inst.easy.size() + inst.hard.size() > cfg.max_answers) return std::nullopt;
    return inst;
}

}  // namespace

std::optional<QueryInstance> instantiate_structure(const TripleStore& full,
                                                   const TripleStore& observed,
                                                   const Vocab& vocab, Structure structure,
                                                   Rng& rng, const GenConfig& cfg) {
    if (structure == Structure::other) throw ConfigError("cannot instantiate `other`");
    Sampler sampler(full, rng);
    return instantiate_impl(sampler, full, observed, vocab, structure, cfg);
}

std::vector<QueryInstance> generate_instances(const TripleStore& full,
                                              const TripleStore& observed, const Vocab& vocab,
                                              Structure structure, std::size_t count, Rng& rng,
                                              const GenConfig& cfg, std::size_t max_rejections) {
    if (structure == Structure::other) throw ConfigError("cannot instantiate `other`");
    Sampler sampler(full, rng);
    std::vector<QueryInstance> out;
    std::size_t rejections = 0;
    while (out.size() < count) {
        auto inst = instantiate_impl(sampler, full, observed, vocab, structure, cfg);
        if (inst.has_value()) {
            inst->id = to_string(structure) + "-" + std::to_string(out.size());
            out.push_back(std::move(*inst));
        } else if (++rejections > max_rejections) {
            throw BudgetError("too many rejected samples for structure " + to_string(structure) +
                              " (" + std::to_string(out.size()) + "/" + std::to_string(count) +
                              " accepted)");
        }
    }
    return out;
}

void save_instances_jsonl(const std::string& path, const std::vector<QueryInstance>& instances,
                          const Vocab& vocab) {
    std::string out;
    for (const auto& inst : instances) {
        json j;
        j["id"] = inst.id;
        j["query"] = print_query(inst.query);
        j["structure"] = to_string(inst.structure);
        auto labels = [&](const std::vector<EntityId>& ids) {
            std::vector<std::string> out_labels;
            out_labels.reserve(ids.size());
            for (EntityId e : ids) out_labels.push_back(vocab.entity_label(e));
            return out_labels;
        };
        j["easy"] = labels(inst.easy);
        j["hard"] = labels(inst.hard);
        out += j.dump();
        out += '\n';
    }
    atomic_write(path, out);
}

std::vector<QueryInstance> load_instances_jsonl(const std::string& path, const Vocab& vocab) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<QueryInstance> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(path + ": line " + std::to_string(lineno) + ": " + e.what(), 0);
        }
        QueryInstance inst;
        inst.id = j.at("id").get<std::string>();
        inst.query = parse_query(j.at("query").get<std::string>());
        inst.structure = structure_from_string(j.at("structure").get<std::string>());
        for (const auto& label : j.at("easy")) {
            inst.easy.push_back(vocab.entity_id(label.get<std::string>()));
        }
        for (const auto& label : j.at("hard")) {
            inst.hard.push_back(vocab.entity_id(label.get<std::string>()));
        }
        std::sort(inst.easy.begin(), inst.easy.end());
        std::sort(inst.hard.begin(), inst.hard.end());
        out.push_back(std::move(inst));
    }
    return out;
}

}  // namespace cqda
