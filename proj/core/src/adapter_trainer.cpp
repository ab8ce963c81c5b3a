#include "cqda/adapter_trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "cqda/errors.hpp"
#include "cqda/log.hpp"

namespace cqda {

namespace {

constexpr double kBceEps = 1e-7;

double literal_value(const FuzzyConfig& fuzzy, const PreparedAtom& atom, double adapted) {
    return atom.negated ? negate(fuzzy, adapted) : adapted;
}

// d(literal value)/d(adapted score)
double literal_value_grad(const FuzzyConfig& fuzzy, const PreparedAtom& atom, double adapted) {
    if (!atom.negated) return 1.0;
    if (fuzzy.negation == NegationKind::standard) return -1.0;
    return -0.5 * M_PI * std::sin(M_PI * adapted);
}

double logsumexp(std::span<const double> v) {
    double mx = *std::max_element(v.begin(), v.end());
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - mx);
    return mx + std::log(acc);
}

struct ForwardValues {
    // per atom, per entity
    std::vector<std::vector<double>> adapted;
    std::vector<std::vector<bool>> clamped;  // pre-clamp value outside [0,1]
    std::vector<double> scores;              // folded query scores
};

ForwardValues forward_query(const PreparedQuery& q, const FuzzyConfig& fuzzy) {
    ForwardValues f;
    std::size_t n = q.atoms.empty() ? 0 : q.atoms[0].normalized.size();
    f.adapted.resize(q.atoms.size());
    f.clamped.resize(q.atoms.size());
    for (std::size_t l = 0; l < q.atoms.size(); ++l) {
        const auto& atom = q.atoms[l];
        f.adapted[l].resize(n);
        f.clamped[l].resize(n);
        for (std::size_t e = 0; e < n; ++e) {
            double pre = adapt_pre_clamp(atom.theta.alpha, atom.theta.beta, atom.normalized[e]);
            f.clamped[l][e] = pre < 0.0 || pre > 1.0;
            f.adapted[l][e] = std::clamp(pre, 0.0, 1.0);
        }
    }
    f.scores.assign(n, 1.0);
    for (std::size_t l = 0; l < q.atoms.size(); ++l) {
        for (std::size_t e = 0; e < n; ++e) {
            f.scores[e] =
                tnorm(fuzzy, f.scores[e], literal_value(fuzzy, q.atoms[l], f.adapted[l][e]));
        }
    }
    return f;
}

// d(fold)/d(literal value) for every literal at one entity, following the
// fold conventions: product rule, first-argmin subgradient for Gödel, and
// step-activity masks for Lukasiewicz.
void fold_grads(const FuzzyConfig& fuzzy, std::span<const double> values,
                std::vector<double>& out) {
    std::size_t n = values.size();
    out.assign(n, 0.0);
    switch (fuzzy.tnorm) {
        case TNormKind::product: {
            std::vector<double> prefix(n + 1, 1.0), suffix(n + 1, 1.0);
            for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] * values[i];
            for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] * values[i];
            for (std::size_t i = 0; i < n; ++i) out[i] = prefix[i] * suffix[i + 1];
            return;
        }
        case TNormKind::godel: {
            std::size_t argmin = 0;
            for (std::size_t i = 1; i < n; ++i) {
                if (values[i] < values[argmin]) argmin = i;
            }
            out[argmin] = 1.0;
            return;
        }
        case TNormKind::lukasiewicz: {
            // acc_i = max(0, acc_{i-1} + v_i - 1); gradient flows through
            // steps whose pre-clamp stayed positive.
            std::vector<double> acc(n + 1, 1.0);
            std::vector<bool> active(n);
            for (std::size_t i = 0; i < n; ++i) {
                double pre = acc[i] + values[i] - 1.0;
                active[i] = pre > 0.0;
                acc[i + 1] = std::max(0.0, pre);
            }
            double chain = 1.0;
            for (std::size_t i = n; i-- > 0;) {
                out[i] = active[i] ? chain : 0.0;
                chain *= active[i] ? 1.0 : 0.0;
            }
            return;
        }
    }
}

// dL/d(score[e]) per query for the batch loss; factor 1/pairs applied here.
std::vector<std::vector<double>> loss_score_grads(std::span<const PreparedQuery> batch,
                                                  const std::vector<ForwardValues>& fwd,
                                                  LpLoss loss, std::uint64_t negative_seed,
                                                  double* loss_out) {
    std::size_t total_pairs = 0;
    for (const auto& q : batch) total_pairs += q.answers.size();
    if (total_pairs == 0) throw ContractError("adapter batch has no (query, answer) pairs");
    double inv = 1.0 / static_cast<double>(total_pairs);

    std::vector<std::vector<double>> gs(batch.size());
    Rng neg_rng(negative_seed);
    double total_loss = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& q = batch[b];
        const auto& s = fwd[b].scores;
        gs[b].assign(s.size(), 0.0);
        if (loss == LpLoss::one_vs_all) {
            double lse = logsumexp(s);
            double mx = *std::max_element(s.begin(), s.end());
            double z = 0.0;
            for (double v : s) z += std::exp(v - mx);
            for (EntityId a : q.answers) {
                total_loss += (-s[static_cast<std::size_t>(a)] + lse) * inv;
                gs[b][static_cast<std::size_t>(a)] -= inv;
            }
            double scale = static_cast<double>(q.answers.size()) * inv;
            for (std::size_t e = 0; e < s.size(); ++e) {
                gs[b][e] += scale * std::exp(s[e] - mx) / z;
            }
        } else {
            // One uniform non-answer per positive pair.
            std::vector<EntityId> pool;
            pool.reserve(s.size());
            for (std::size_t e = 0; e < s.size(); ++e) {
                if (!std::binary_search(q.known_answers.begin(), q.known_answers.end(),
                                        static_cast<EntityId>(e))) {
                    pool.push_back(static_cast<EntityId>(e));
                }
            }
            if (pool.empty()) {
                throw ContractError("binary_ce: no non-answer entities to sample");
            }
            for (EntityId a : q.answers) {
                EntityId neg = pool[static_cast<std::size_t>(
                    neg_rng.uniform_int(static_cast<std::int64_t>(pool.size())))];
                double sp = s[static_cast<std::size_t>(a)];
                double sn = s[static_cast<std::size_t>(neg)];
                double pos_c = std::max(sp, kBceEps);
                double neg_c = std::max(1.0 - sn, kBceEps);
                total_loss += (-std::log(pos_c) - std::log(neg_c)) * inv;
                if (sp > kBceEps) gs[b][static_cast<std::size_t>(a)] -= inv / pos_c;
                if (1.0 - sn > kBceEps) gs[b][static_cast<std::size_t>(neg)] += inv / neg_c;
            }
        }
    }
    if (loss_out != nullptr) *loss_out = total_loss;
    return gs;
}

}  // namespace

PreparedQuery prepare_query(const Embeddings& emb, const Vocab& vocab,
                            const AdapterParams& adapter, const QueryInstance& inst,
                            NormalizeKind normalize_kind) {
    DnfQuery dnf = to_dnf(inst.query);
    if (dnf.disjuncts.size() != 1) {
        throw ContractError("adapter training requires single-conjunct queries, got " +
                            std::to_string(dnf.disjuncts.size()) + " disjuncts");
    }
    PreparedQuery out;
    for (const auto& lit : dnf.disjuncts[0].literals) {
        if (lit.atom.lhs.is_variable || !lit.atom.rhs.is_variable ||
            lit.atom.rhs.name != dnf.target) {
            throw ContractError(
                "adapter training requires intersection-family queries (anchor -> target "
                "atoms only); offending query: " +
                inst.id);
        }
        PreparedAtom atom;
        atom.rel = vocab.relation_id(lit.atom.relation);
        atom.source = vocab.entity_id(lit.atom.lhs.name);
        atom.negated = lit.negated;
        auto raw = score_all_objects(emb, atom.rel, atom.source);
        atom.normalized = normalize(raw, normalize_kind);
        atom.theta = adapter_theta_cached(adapter, emb, atom.rel, atom.source, atom.tape);
        out.atoms.push_back(std::move(atom));
    }
    out.answers.reserve(inst.easy.size() + inst.hard.size());
    std::set_union(inst.easy.begin(), inst.easy.end(), inst.hard.begin(), inst.hard.end(),
                   std::back_inserter(out.answers));
    out.known_answers = out.answers;
    if (out.answers.empty()) {
        throw ContractError("adapter training query " + inst.id + " has no answers");
    }
    return out;
}

std::vector<double> prepared_scores(const PreparedQuery& q, const FuzzyConfig& fuzzy) {
    return forward_query(q, fuzzy).scores;
}

double prepared_batch_loss(std::span<const PreparedQuery> batch, const FuzzyConfig& fuzzy,
                           LpLoss loss, std::uint64_t negative_seed) {
    std::vector<ForwardValues> fwd;
    fwd.reserve(batch.size());
    for (const auto& q : batch) fwd.push_back(forward_query(q, fuzzy));
    double loss_value = 0.0;
    loss_score_grads(batch, fwd, loss, negative_seed, &loss_value);
    return loss_value;
}

std::vector<double> prepared_batch_grad(std::span<const PreparedQuery> batch,
                                        const AdapterParams& adapter, const FuzzyConfig& fuzzy,
                                        LpLoss loss, std::uint64_t negative_seed) {
    std::vector<ForwardValues> fwd;
    fwd.reserve(batch.size());
    for (const auto& q : batch) fwd.push_back(forward_query(q, fuzzy));
    auto gs = loss_score_grads(batch, fwd, loss, negative_seed, nullptr);

    std::vector<double> grad(adapter.params.size(), 0.0);
    std::vector<double> values;
    std::vector<double> dfold;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& q = batch[b];
        std::size_t n_atoms = q.atoms.size();
        std::size_t n = fwd[b].scores.size();
        std::vector<double> dalpha(n_atoms, 0.0), dbeta(n_atoms, 0.0);
        values.resize(n_atoms);
        for (std::size_t e = 0; e < n; ++e) {
            double g = gs[b][e];
            if (g == 0.0) continue;
            for (std::size_t l = 0; l < n_atoms; ++l) {
                values[l] = literal_value(fuzzy, q.atoms[l], fwd[b].adapted[l][e]);
            }
            fold_grads(fuzzy, values, dfold);
            for (std::size_t l = 0; l < n_atoms; ++l) {
                if (dfold[l] == 0.0 || fwd[b].clamped[l][e]) continue;
                double da =
                    g * dfold[l] * literal_value_grad(fuzzy, q.atoms[l], fwd[b].adapted[l][e]);
                dalpha[l] += da * q.atoms[l].normalized[e];
                dbeta[l] += da;
            }
        }
        for (std::size_t l = 0; l < n_atoms; ++l) {
            if (dalpha[l] == 0.0 && dbeta[l] == 0.0) continue;
            adapter_theta_backward(adapter, q.atoms[l].tape, dalpha[l], dbeta[l], grad);
        }
    }
    return grad;
}

double adapter_loss(const Embeddings& emb, const Vocab& vocab, const AdapterParams& adapter,
                    std::span<const QueryInstance> batch, const AdapterTrainConfig& cfg) {
    std::vector<PreparedQuery> prepared;
    prepared.reserve(batch.size());
    for (const auto& inst : batch) {
        prepared.push_back(prepare_query(emb, vocab, adapter, inst, cfg.normalize));
    }
    return prepared_batch_loss(prepared, cfg.fuzzy, cfg.loss,
                               derive_seed(cfg.seed, "bce-negatives"));
}

std::vector<double> adapter_grad(const Embeddings& emb, const Vocab& vocab,
                                 const AdapterParams& adapter,
                                 std::span<const QueryInstance> batch,
                                 const AdapterTrainConfig& cfg) {
    std::vector<PreparedQuery> prepared;
    prepared.reserve(batch.size());
    for (const auto& inst : batch) {
        prepared.push_back(prepare_query(emb, vocab, adapter, inst, cfg.normalize));
    }
    return prepared_batch_grad(prepared, adapter, cfg.fuzzy, cfg.loss,
                               derive_seed(cfg.seed, "bce-negatives"));
}

std::vector<std::size_t> subsample_indices(std::size_t n, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ConfigError("fraction must lie in (0, 1]");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "subsample"));
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i)));
        std::swap(order[i - 1], order[j]);
    }
    auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    count = std::min(count, n);
    order.resize(count);
    return order;
}

AdapterTrainResult train_adapter(const Embeddings& emb, const Vocab& vocab,
                                 const std::vector<QueryInstance>& queries,
                                 const AdapterTrainConfig& cfg, std::ostream* csv_log) {
    std::vector<const QueryInstance*> filtered;
    for (const auto& q : queries) {
        if (std::find(cfg.train_types.begin(), cfg.train_types.end(), q.structure) !=
            cfg.train_types.end()) {
            filtered.push_back(&q);
        }
    }
    if (cfg.train_types.empty()) throw ConfigError("train_types must be nonempty");
    if (filtered.empty()) {
        throw ConfigError("no training queries left after filtering to the configured types");
    }
    auto picked = subsample_indices(filtered.size(), cfg.fraction, cfg.seed);
    if (picked.empty()) {
        throw ConfigError("fraction " + std::to_string(cfg.fraction) +
                          " leaves no training queries");
    }

    AdapterParams adapter =
        init_adapter(cfg.variant, emb.dim, derive_seed(cfg.seed, "adapter-init"), cfg.hidden);
    std::vector<double> acc(adapter.params.size(), 0.0);
    const double eps = 1e-10;

    // Normalized atom vectors only depend on (relation, source); cache them
    // across steps and rebuild thetas as the parameters move.
    std::vector<PreparedQuery> prepared;
    prepared.reserve(picked.size());
    for (std::size_t idx : picked) {
        prepared.push_back(prepare_query(emb, vocab, adapter, *filtered[idx], cfg.normalize));
    }

    Rng batch_rng(derive_seed(cfg.seed, "batches"));
    AdapterTrainResult result;
    auto t0 = std::chrono::steady_clock::now();

    std::vector<PreparedQuery> batch;
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        batch.clear();
        std::size_t batch_n = std::min(cfg.batch_size, prepared.size());
        for (std::size_t i = 0; i < batch_n; ++i) {
            batch.push_back(prepared[static_cast<std::size_t>(
                batch_rng.uniform_int(static_cast<std::int64_t>(prepared.size())))]);
        }
        for (auto& q : batch) {
            for (auto& atom : q.atoms) {
                atom.theta = adapter_theta_cached(adapter, emb, atom.rel, atom.source, atom.tape);
            }
        }
        std::uint64_t neg_seed = derive_seed(cfg.seed, "step-" + std::to_string(step));
        double loss = prepared_batch_loss(batch, cfg.fuzzy, cfg.loss, neg_seed);
        auto grad = prepared_batch_grad(batch, adapter, cfg.fuzzy, cfg.loss, neg_seed);
        if (!std::isfinite(loss)) {
            throw NumericError("train_adapter: non-finite loss at step " + std::to_string(step));
        }

        if (step % cfg.log_every == 0 || step + 1 == cfg.steps) {
            result.trace.emplace_back(step, loss);
            if (csv_log != nullptr) {
                double gnorm = 0.0;
                for (double g : grad) gnorm += g * g;
                auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
                (*csv_log) << step << ',' << loss << ',' << std::sqrt(gnorm) << ',' << ms
                           << '\n';
            }
        }

        for (std::size_t i = 0; i < adapter.params.size(); ++i) {
            double g = grad[i];
            if (g == 0.0) continue;
            acc[i] += g * g;
            adapter.params[i] -= cfg.learning_rate * g / (std::sqrt(acc[i]) + eps);
        }
    }
    result.adapter = std::move(adapter);
    return result;
}

}  // namespace cqda
