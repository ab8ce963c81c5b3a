#include "cqda/exact.hpp"

#include <algorithm>
#include <unordered_map>

#include "cqda/errors.hpp"

namespace cqda {

namespace {

struct ResolvedEdge {
    RelationId rel;
    bool negated;
    bool src_is_var;
    EntityId src_anchor;      // valid when !src_is_var
    std::size_t src_var;      // index into topo order when src_is_var
    std::size_t dst_var;      // index into topo order
};

struct DisjunctPlan {
    std::vector<std::string> topo;
    // Edges grouped by destination variable (its topo position).
    std::vector<std::vector<ResolvedEdge>> in_edges;
};

std::vector<EntityId> intersect_sorted(const std::vector<EntityId>& a,
                                       const std::vector<EntityId>& b) {
    std::vector<EntityId> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

std::vector<EntityId> subtract_sorted(const std::vector<EntityId>& a,
                                      const std::vector<EntityId>& b) {
    std::vector<EntityId> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

class ExactSolver {
public:
    ExactSolver(const TripleStore& store, const Vocab& vocab, std::size_t budget)
        : store_(store), vocab_(vocab), budget_(budget) {}

    // Returns false when the caller's answer cap is hit.
    bool solve_disjunct(const DisjunctDag& dag, std::set<EntityId>& answers,
                        std::size_t max_answers) {
        DisjunctPlan plan;
        plan.topo = dag.topo_order;
        plan.in_edges.resize(plan.topo.size());
        std::unordered_map<std::string, std::size_t> var_pos;
        for (std::size_t i = 0; i < plan.topo.size(); ++i) var_pos[plan.topo[i]] = i;
        for (const auto& e : dag.edges) {
            ResolvedEdge re;
            re.rel = vocab_.relation_id(e.relation);
            re.negated = e.negated;
            re.src_is_var = e.src.is_variable;
            if (re.src_is_var) {
                re.src_var = var_pos.at(e.src.name);
            } else {
                re.src_anchor = vocab_.entity_id(e.src.name);
            }
            re.dst_var = var_pos.at(e.dst.name);
            plan.in_edges[re.dst_var].push_back(re);
        }
        assignment_.assign(plan.topo.size(), -1);
        return extend(plan, 0, answers, max_answers);
    }

private:
    bool extend(const DisjunctPlan& plan, std::size_t level, std::set<EntityId>& answers,
                std::size_t max_answers) {
        charge();
        std::optional<std::vector<EntityId>> cand;
        std::vector<EntityId> scratch;
        for (const auto& e : plan.in_edges[level]) {
            EntityId src = e.src_is_var ? assignment_[e.src_var] : e.src_anchor;
            const auto& nbrs = store_.neighbors(src, e.rel, Direction::forward);
            if (e.negated) continue;
            cand = cand.has_value() ? intersect_sorted(*cand, nbrs) : nbrs;
            if (cand->empty()) return true;
        }
        if (!cand.has_value()) return true;  // unreachable: validated positively reachable
        for (const auto& e : plan.in_edges[level]) {
            if (!e.negated) continue;
            EntityId src = e.src_is_var ? assignment_[e.src_var] : e.src_anchor;
            cand = subtract_sorted(*cand, store_.neighbors(src, e.rel, Direction::forward));
            if (cand->empty()) return true;
        }

        bool last = level + 1 == plan.topo.size();
        for (EntityId c : *cand) {
            charge();
            if (last) {
                // Topo order puts the target last; every candidate here
                // completes a consistent grounding.
                answers.insert(c);
                if (max_answers > 0 && answers.size() > max_answers) return false;
            } else {
                assignment_[level] = c;
                if (!extend(plan, level + 1, answers, max_answers)) return false;
            }
        }
        assignment_[level] = -1;
        return true;
    }

    void charge() {
        if (budget_ == 0) return;
        if (++spent_ > budget_) {
            throw BudgetError("exact answering exceeded its grounding budget");
        }
    }

    const TripleStore& store_;
    const Vocab& vocab_;
    std::vector<EntityId> assignment_;
    std::size_t budget_;
    std::size_t spent_ = 0;
};

}  // namespace

std::set<EntityId> answer_exact(const TripleStore& store, const Vocab& vocab, const DnfQuery& q,
                                std::size_t budget) {
    auto result = answer_exact_capped(store, vocab, q, 0, budget);
    return std::move(*result);
}

std::optional<std::set<EntityId>> answer_exact_capped(const TripleStore& store,
                                                      const Vocab& vocab, const DnfQuery& q,
                                                      std::size_t max_answers,
                                                      std::size_t budget) {
    DependencyGraph graph = dependency_graph(q);
    ExactSolver solver(store, vocab, budget);
    std::set<EntityId> answers;
    for (std::size_t d = 0; d < q.disjuncts.size(); ++d) {
        if (!solver.solve_disjunct(graph.disjuncts[d], answers, max_answers)) {
            return std::nullopt;
        }
    }
    return answers;
}

}  // namespace cqda
