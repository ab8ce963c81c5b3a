#include "cqda/engine.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "cqda/errors.hpp"

namespace cqda {

namespace {

// Adapted, normalized candidate vectors per (relation, source) atom, cached
// so both code paths score an atom exactly once.
class AtomScorer {
public:
    AtomScorer(const Embeddings& emb, const EngineConfig& cfg) : emb_(emb), cfg_(cfg) {}

    const std::vector<double>& candidates(RelationId p, EntityId s) {
        std::uint64_t k = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p)) << 32) |
                          static_cast<std::uint32_t>(s);
        auto it = cache_.find(k);
        if (it != cache_.end()) return it->second;
        auto raw = score_all_objects(emb_, p, s);
        auto scores = normalize(raw, cfg_.normalize);
        if (cfg_.adapter != nullptr) {
            Theta theta = adapter_theta(*cfg_.adapter, emb_, p, s);
            adapt_vector(theta, scores);
        }
        return cache_.emplace(k, std::move(scores)).first->second;
    }

private:
    const Embeddings& emb_;
    const EngineConfig& cfg_;
    std::unordered_map<std::uint64_t, std::vector<double>> cache_;
};

struct EngineLit {
    RelationId rel;
    bool negated;
    bool src_is_var;
    EntityId src_anchor = -1;
    std::size_t src_var = 0;  // topo position
    std::size_t dst_var = 0;  // topo position
};

struct DisjunctPlan {
    std::size_t n_vars = 0;
    std::vector<EngineLit> lits;                     // conjunct literal order
    std::vector<std::vector<std::size_t>> at_step;   // literal ids grouped by dst topo position
    std::vector<std::vector<std::size_t>> frontier;  // after step i: topo vars still needed
};

DisjunctPlan make_plan(const Conjunct& conj, const DisjunctDag& dag, const Vocab& vocab) {
    DisjunctPlan plan;
    plan.n_vars = dag.topo_order.size();
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < dag.topo_order.size(); ++i) pos[dag.topo_order[i]] = i;
    for (const auto& lit : conj.literals) {
        EngineLit el;
        el.rel = vocab.relation_id(lit.atom.relation);
        el.negated = lit.negated;
        el.src_is_var = lit.atom.lhs.is_variable;
        if (el.src_is_var) {
            el.src_var = pos.at(lit.atom.lhs.name);
        } else {
            el.src_anchor = vocab.entity_id(lit.atom.lhs.name);
        }
        el.dst_var = pos.at(lit.atom.rhs.name);
        plan.lits.push_back(el);
    }
    plan.at_step.resize(plan.n_vars);
    for (std::size_t l = 0; l < plan.lits.size(); ++l) {
        plan.at_step[plan.lits[l].dst_var].push_back(l);
    }
    plan.frontier.resize(plan.n_vars);
    for (std::size_t i = 0; i < plan.n_vars; ++i) {
        for (const auto& el : plan.lits) {
            if (el.dst_var > i && el.src_is_var && el.src_var <= i) {
                auto& f = plan.frontier[i];
                if (std::find(f.begin(), f.end(), el.src_var) == f.end()) {
                    f.push_back(el.src_var);
                }
            }
        }
        std::sort(plan.frontier[i].begin(), plan.frontier[i].end());
    }
    return plan;
}

struct BeamEntry {
    std::vector<EntityId> sub;  // bindings for topo positions [0, level)
    double score = 1.0;
};

// Extension score of `entity` for topo step `level` under `entry`:
// t-norm fold of the positive in-literals followed by the negated ones.
double extension_score(const DisjunctPlan& plan, std::size_t level, const BeamEntry& entry,
                       std::size_t entity, AtomScorer& scorer, const FuzzyConfig& fuzzy) {
    double acc = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t l : plan.at_step[level]) {
            const EngineLit& el = plan.lits[l];
            if (el.negated != (pass == 1)) continue;
            EntityId src = el.src_is_var ? entry.sub[el.src_var] : el.src_anchor;
            double v = scorer.candidates(el.rel, src)[entity];
            acc = tnorm(fuzzy, acc, el.negated ? negate(fuzzy, v) : v);
        }
    }
    return acc;
}

std::vector<double> beam_disjunct(const DisjunctPlan& plan, std::size_t n_entities,
                                  AtomScorer& scorer, const EngineConfig& cfg) {
    std::vector<BeamEntry> beam{BeamEntry{}};
    const auto k = static_cast<std::size_t>(cfg.beam_width);

    for (std::size_t level = 0; level + 1 < plan.n_vars; ++level) {
        // Keep only the best entry per binding of the variables later
        // literals still reference; larger beams then subsume smaller ones.
        const auto& frontier = plan.frontier[level];
        bool single_frontier = frontier.size() <= 1 && (frontier.empty() || frontier[0] == level);
        std::vector<BeamEntry> merged;
        auto consider = [](BeamEntry& slot, BeamEntry&& next) {
            if (slot.sub.empty() || next.score > slot.score ||
                (next.score == slot.score && next.sub < slot.sub)) {
                slot = std::move(next);
            }
        };
        if (single_frontier) {
            // The taxonomy shapes always come through here: the only binding
            // later literals need is the variable just grounded.
            std::vector<BeamEntry> best(n_entities);
            for (const auto& entry : beam) {
                for (std::size_t e = 0; e < n_entities; ++e) {
                    double ext = extension_score(plan, level, entry, e, scorer, cfg.fuzzy);
                    BeamEntry next;
                    next.sub = entry.sub;
                    next.sub.push_back(static_cast<EntityId>(e));
                    next.score = tnorm(cfg.fuzzy, entry.score, ext);
                    consider(best[e], std::move(next));
                }
            }
            for (auto& entry : best) {
                if (!entry.sub.empty()) merged.push_back(std::move(entry));
            }
        } else {
            std::unordered_map<std::string, BeamEntry> best;
            for (const auto& entry : beam) {
                for (std::size_t e = 0; e < n_entities; ++e) {
                    double ext = extension_score(plan, level, entry, e, scorer, cfg.fuzzy);
                    BeamEntry next;
                    next.sub = entry.sub;
                    next.sub.push_back(static_cast<EntityId>(e));
                    next.score = tnorm(cfg.fuzzy, entry.score, ext);
                    std::string key;
                    key.reserve(frontier.size() * sizeof(EntityId));
                    for (std::size_t v : frontier) {
                        key.append(reinterpret_cast<const char*>(&next.sub[v]),
                                   sizeof(EntityId));
                    }
                    consider(best[key], std::move(next));
                }
            }
            merged.reserve(best.size());
            for (auto& [key, entry] : best) merged.push_back(std::move(entry));
        }
        std::sort(merged.begin(), merged.end(), [](const BeamEntry& a, const BeamEntry& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.sub < b.sub;
        });
        if (merged.size() > k) merged.resize(k);
        beam = std::move(merged);
    }

    // Target step: score every entity, best entry wins.
    std::vector<double> out(n_entities, 0.0);
    std::size_t level = plan.n_vars - 1;
    for (const auto& entry : beam) {
        for (std::size_t e = 0; e < n_entities; ++e) {
            double ext = extension_score(plan, level, entry, e, scorer, cfg.fuzzy);
            double score = tnorm(cfg.fuzzy, entry.score, ext);
            out[e] = std::max(out[e], score);
        }
    }
    return out;
}

std::vector<double> exhaustive_disjunct(const DisjunctPlan& plan, std::size_t n_entities,
                                        AtomScorer& scorer, const EngineConfig& cfg) {
    std::size_t m = plan.n_vars - 1;  // bound (non-target) variables
    double combos = std::pow(static_cast<double>(n_entities), static_cast<double>(m));
    if (combos > static_cast<double>(cfg.oracle_budget)) {
        throw BudgetError("exhaustive oracle budget exceeded: |E|^" + std::to_string(m) + " = " +
                          std::to_string(static_cast<std::uint64_t>(combos)) + " > " +
                          std::to_string(cfg.oracle_budget));
    }

    std::vector<double> out(n_entities, 0.0);
    std::vector<EntityId> assign(m, 0);
    std::vector<double> acc(n_entities);
    while (true) {
        // Fold every literal in conjunct order; target-dependent literals
        // contribute per candidate, the rest are scalars.
        std::fill(acc.begin(), acc.end(), 1.0);
        for (const auto& el : plan.lits) {
            // The target is a validated sink, so a literal source is always
            // an anchor or an assigned bound variable.
            EntityId src = el.src_is_var ? assign[el.src_var] : el.src_anchor;
            if (el.dst_var == m) {
                // target destination
                const auto& vec = scorer.candidates(el.rel, src);
                for (std::size_t e = 0; e < n_entities; ++e) {
                    double v = el.negated ? negate(cfg.fuzzy, vec[e]) : vec[e];
                    acc[e] = tnorm(cfg.fuzzy, acc[e], v);
                }
            } else {
                double v = scorer.candidates(el.rel, src)[static_cast<std::size_t>(
                    assign[el.dst_var])];
                if (el.negated) v = negate(cfg.fuzzy, v);
                for (std::size_t e = 0; e < n_entities; ++e) {
                    acc[e] = tnorm(cfg.fuzzy, acc[e], v);
                }
            }
        }
        for (std::size_t e = 0; e < n_entities; ++e) out[e] = std::max(out[e], acc[e]);

        // odometer over the bound variables
        std::size_t i = 0;
        for (; i < m; ++i) {
            if (static_cast<std::size_t>(++assign[i]) < n_entities) break;
            assign[i] = 0;
        }
        if (i == m) break;
    }
    return out;
}

std::vector<double> answer_common(const Embeddings& emb, const Vocab& vocab,
                                  const EngineConfig& cfg, const DnfQuery& q, bool exact) {
    if (cfg.beam_width < 1) throw ConfigError("beam width must be >= 1");
    DependencyGraph graph = dependency_graph(q);
    AtomScorer scorer(emb, cfg);
    std::vector<double> out(emb.n_entities, 0.0);
    for (std::size_t d = 0; d < q.disjuncts.size(); ++d) {
        DisjunctPlan plan = make_plan(q.disjuncts[d], graph.disjuncts[d], vocab);
        auto vec = exact ? exhaustive_disjunct(plan, emb.n_entities, scorer, cfg)
                         : beam_disjunct(plan, emb.n_entities, scorer, cfg);
        if (d == 0) {
            out = std::move(vec);
        } else {
            for (std::size_t e = 0; e < out.size(); ++e) {
                out[e] = tconorm(cfg.fuzzy, out[e], vec[e]);
            }
        }
    }
    return out;
}

}  // namespace

std::vector<double> answer_beam(const Embeddings& emb, const Vocab& vocab,
                                const EngineConfig& cfg, const DnfQuery& q) {
    return answer_common(emb, vocab, cfg, q, false);
}

std::vector<double> answer_exhaustive(const Embeddings& emb, const Vocab& vocab,
                                      const EngineConfig& cfg, const DnfQuery& q) {
    return answer_common(emb, vocab, cfg, q, true);
}

double score_candidate(const Embeddings& emb, const Vocab& vocab, const EngineConfig& cfg,
                       const DnfQuery& q, EntityId candidate, bool exact) {
    if (candidate < 0 || static_cast<std::size_t>(candidate) >= emb.n_entities) {
        throw DomainError("score_candidate: entity index out of range");
    }
    auto vec = answer_common(emb, vocab, cfg, q, exact);
    return vec[static_cast<std::size_t>(candidate)];
}

}  // namespace cqda
