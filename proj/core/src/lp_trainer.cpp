#include "cqda/lp_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cqda/errors.hpp"
#include "cqda/log.hpp"
#include "cqda/rng.hpp"

namespace cqda {

namespace {

double kernel_d(const double* s, const double* p, const double* o, std::int64_t dim) {
    double acc = 0.0;
    for (std::int64_t j = 0; j < dim; ++j) {
        double sr = s[2 * j], si = s[2 * j + 1];
        double pr = p[2 * j], pi = p[2 * j + 1];
        double or_ = o[2 * j], oi = o[2 * j + 1];
        acc += (sr * pr - si * pi) * or_ + (sr * pi + si * pr) * oi;
    }
    return acc;
}

double logsumexp(std::span<const double> v) {
    double mx = *std::max_element(v.begin(), v.end());
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - mx);
    return mx + std::log(acc);
}

double n3_row_d(const double* row, std::int64_t dim) {
    double acc = 0.0;
    for (std::int64_t j = 0; j < dim; ++j) {
        double re = row[2 * j], im = row[2 * j + 1];
        double mod = std::sqrt(re * re + im * im);
        acc += mod * mod * mod;
    }
    return acc;
}

void n3_row_grad(const double* row, std::int64_t dim, double scale, double* grad) {
    // d|z|^3/dre = 3|z|*re (0 at the origin).
    for (std::int64_t j = 0; j < dim; ++j) {
        double re = row[2 * j], im = row[2 * j + 1];
        double mod = std::sqrt(re * re + im * im);
        grad[2 * j] += scale * 3.0 * mod * re;
        grad[2 * j + 1] += scale * 3.0 * mod * im;
    }
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(sigmoid(x)) computed stably.
double log_sigmoid(double x) {
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

struct Tables {
    const std::vector<double>& ent;
    const std::vector<double>& rel;
    std::int64_t dim;
    std::size_t n_entities;

    const double* ent_row(EntityId e) const {
        return ent.data() + static_cast<std::size_t>(e) * 2 * dim;
    }
    const double* rel_row(RelationId p) const {
        return rel.data() + static_cast<std::size_t>(p) * 2 * dim;
    }
};

void all_object_scores(const Tables& t, EntityId s, RelationId p, std::vector<double>& out) {
    out.resize(t.n_entities);
    const double* srow = t.ent_row(s);
    const double* prow = t.rel_row(p);
    for (std::size_t o = 0; o < t.n_entities; ++o) {
        out[o] = kernel_d(srow, prow, t.ent.data() + o * 2 * t.dim, t.dim);
    }
}

void all_subject_scores(const Tables& t, RelationId p, EntityId o, std::vector<double>& out) {
    out.resize(t.n_entities);
    const double* orow = t.ent_row(o);
    const double* prow = t.rel_row(p);
    for (std::size_t s = 0; s < t.n_entities; ++s) {
        out[s] = kernel_d(t.ent.data() + s * 2 * t.dim, prow, orow, t.dim);
    }
}

}  // namespace

LpLoss lp_loss_from_string(const std::string& name) {
    if (name == "one_vs_all") return LpLoss::one_vs_all;
    if (name == "binary_ce") return LpLoss::binary_ce;
    throw ConfigError("unknown link-predictor loss: " + name);
}

std::string to_string(LpLoss k) {
    return k == LpLoss::one_vs_all ? "one_vs_all" : "binary_ce";
}

double lp_batch_loss(const std::vector<double>& ent, const std::vector<double>& rel,
                     std::int64_t dim, std::size_t n_entities,
                     std::span<const LpBatchItem> batch, double reg_weight, LpLoss loss) {
    Tables t{ent, rel, dim, n_entities};
    double total = 0.0;
    std::vector<double> scores;
    for (const auto& item : batch) {
        const Triple& tr = item.triple;
        if (loss == LpLoss::one_vs_all) {
            all_object_scores(t, tr.s, tr.p, scores);
            total += -scores[static_cast<std::size_t>(tr.o)] + logsumexp(scores);
            all_subject_scores(t, tr.p, tr.o, scores);
            total += -scores[static_cast<std::size_t>(tr.s)] + logsumexp(scores);
        } else {
            double pos = kernel_d(t.ent_row(tr.s), t.rel_row(tr.p), t.ent_row(tr.o), dim);
            double no = kernel_d(t.ent_row(tr.s), t.rel_row(tr.p), t.ent_row(item.neg_object),
                                 dim);
            double ns = kernel_d(t.ent_row(item.neg_subject), t.rel_row(tr.p), t.ent_row(tr.o),
                                 dim);
            total += -log_sigmoid(pos) - log_sigmoid(-no) - log_sigmoid(-ns);
        }
        if (reg_weight > 0.0) {
            total += reg_weight * (n3_row_d(t.ent_row(tr.s), dim) + n3_row_d(t.rel_row(tr.p), dim) +
                                   n3_row_d(t.ent_row(tr.o), dim));
        }
    }
    return total / static_cast<double>(batch.size());
}

void lp_batch_grad(const std::vector<double>& ent, const std::vector<double>& rel,
                   std::int64_t dim, std::size_t n_entities, std::span<const LpBatchItem> batch,
                   double reg_weight, LpLoss loss, std::vector<double>& grad_ent,
                   std::vector<double>& grad_rel) {
    Tables t{ent, rel, dim, n_entities};
    double inv = 1.0 / static_cast<double>(batch.size());
    std::vector<double> scores;
    std::vector<double> wsum(2 * static_cast<std::size_t>(dim));

    auto add_pair_grads = [&](EntityId s, RelationId p, EntityId o, double w) {
        // d score / d each row, scaled by w, for a single (s,p,o).
        const double* srow = t.ent_row(s);
        const double* prow = t.rel_row(p);
        const double* orow = t.ent_row(o);
        double* gs = grad_ent.data() + static_cast<std::size_t>(s) * 2 * dim;
        double* gp = grad_rel.data() + static_cast<std::size_t>(p) * 2 * dim;
        double* go = grad_ent.data() + static_cast<std::size_t>(o) * 2 * dim;
        for (std::int64_t j = 0; j < dim; ++j) {
            double sr = srow[2 * j], si = srow[2 * j + 1];
            double pr = prow[2 * j], pi = prow[2 * j + 1];
            double or_ = orow[2 * j], oi = orow[2 * j + 1];
            gs[2 * j] += w * (pr * or_ + pi * oi);
            gs[2 * j + 1] += w * (-pi * or_ + pr * oi);
            gp[2 * j] += w * (sr * or_ + si * oi);
            gp[2 * j + 1] += w * (-si * or_ + sr * oi);
            go[2 * j] += w * (sr * pr - si * pi);
            go[2 * j + 1] += w * (sr * pi + si * pr);
        }
    };

    for (const auto& item : batch) {
        const Triple& tr = item.triple;
        if (loss == LpLoss::one_vs_all) {
            // Object direction: softmax weights minus the one-hot target.
            all_object_scores(t, tr.s, tr.p, scores);
            double mx = *std::max_element(scores.begin(), scores.end());
            double z = 0.0;
            for (double v : scores) z += std::exp(v - mx);
            const double* srow = t.ent_row(tr.s);
            const double* prow = t.rel_row(tr.p);
            std::fill(wsum.begin(), wsum.end(), 0.0);
            for (std::size_t o = 0; o < n_entities; ++o) {
                double w = std::exp(scores[o] - mx) / z -
                           (o == static_cast<std::size_t>(tr.o) ? 1.0 : 0.0);
                if (w == 0.0) continue;
                const double* orow = t.ent.data() + o * 2 * dim;
                double* go = grad_ent.data() + o * 2 * dim;
                for (std::int64_t j = 0; j < dim; ++j) {
                    double sr = srow[2 * j], si = srow[2 * j + 1];
                    double pr = prow[2 * j], pi = prow[2 * j + 1];
                    go[2 * j] += inv * w * (sr * pr - si * pi);
                    go[2 * j + 1] += inv * w * (sr * pi + si * pr);
                    wsum[2 * j] += w * orow[2 * j];
                    wsum[2 * j + 1] += w * orow[2 * j + 1];
                }
            }
            double* gs = grad_ent.data() + static_cast<std::size_t>(tr.s) * 2 * dim;
            double* gp = grad_rel.data() + static_cast<std::size_t>(tr.p) * 2 * dim;
            for (std::int64_t j = 0; j < dim; ++j) {
                double wr = wsum[2 * j], wi = wsum[2 * j + 1];
                double sr = srow[2 * j], si = srow[2 * j + 1];
                double pr = prow[2 * j], pi = prow[2 * j + 1];
                gs[2 * j] += inv * (pr * wr + pi * wi);
                gs[2 * j + 1] += inv * (-pi * wr + pr * wi);
                gp[2 * j] += inv * (sr * wr + si * wi);
                gp[2 * j + 1] += inv * (-si * wr + sr * wi);
            }

            // Subject direction.
            all_subject_scores(t, tr.p, tr.o, scores);
            mx = *std::max_element(scores.begin(), scores.end());
            z = 0.0;
            for (double v : scores) z += std::exp(v - mx);
            const double* orow = t.ent_row(tr.o);
            std::fill(wsum.begin(), wsum.end(), 0.0);
            for (std::size_t s = 0; s < n_entities; ++s) {
                double w = std::exp(scores[s] - mx) / z -
                           (s == static_cast<std::size_t>(tr.s) ? 1.0 : 0.0);
                if (w == 0.0) continue;
                const double* sr_row = t.ent.data() + s * 2 * dim;
                double* gs2 = grad_ent.data() + s * 2 * dim;
                for (std::int64_t j = 0; j < dim; ++j) {
                    double pr = prow[2 * j], pi = prow[2 * j + 1];
                    double or_ = orow[2 * j], oi = orow[2 * j + 1];
                    gs2[2 * j] += inv * w * (pr * or_ + pi * oi);
                    gs2[2 * j + 1] += inv * w * (-pi * or_ + pr * oi);
                    wsum[2 * j] += w * sr_row[2 * j];
                    wsum[2 * j + 1] += w * sr_row[2 * j + 1];
                }
            }
            double* gp2 = grad_rel.data() + static_cast<std::size_t>(tr.p) * 2 * dim;
            double* go2 = grad_ent.data() + static_cast<std::size_t>(tr.o) * 2 * dim;
            for (std::int64_t j = 0; j < dim; ++j) {
                double wr = wsum[2 * j], wi = wsum[2 * j + 1];
                double pr = prow[2 * j], pi = prow[2 * j + 1];
                double or_ = orow[2 * j], oi = orow[2 * j + 1];
                gp2[2 * j] += inv * (wr * or_ + wi * oi);
                gp2[2 * j + 1] += inv * (-wi * or_ + wr * oi);
                go2[2 * j] += inv * (wr * pr - wi * pi);
                go2[2 * j + 1] += inv * (wr * pi + wi * pr);
            }
        } else {
            double pos = kernel_d(t.ent_row(tr.s), t.rel_row(tr.p), t.ent_row(tr.o), dim);
            double no = kernel_d(t.ent_row(tr.s), t.rel_row(tr.p), t.ent_row(item.neg_object),
                                 dim);
            double ns = kernel_d(t.ent_row(item.neg_subject), t.rel_row(tr.p), t.ent_row(tr.o),
                                 dim);
            add_pair_grads(tr.s, tr.p, tr.o, inv * (logistic(pos) - 1.0));
            add_pair_grads(tr.s, tr.p, item.neg_object, inv * logistic(no));
            add_pair_grads(item.neg_subject, tr.p, tr.o, inv * logistic(ns));
        }
        if (reg_weight > 0.0) {
            n3_row_grad(t.ent_row(tr.s), dim, inv * reg_weight,
                        grad_ent.data() + static_cast<std::size_t>(tr.s) * 2 * dim);
            n3_row_grad(t.rel_row(tr.p), dim, inv * reg_weight,
                        grad_rel.data() + static_cast<std::size_t>(tr.p) * 2 * dim);
            n3_row_grad(t.ent_row(tr.o), dim, inv * reg_weight,
                        grad_ent.data() + static_cast<std::size_t>(tr.o) * 2 * dim);
        }
    }
}

LpTrainResult train_lp(const TripleStore& store, const LpTrainConfig& cfg) {
    if (store.size() == 0) throw ConfigError("train_lp: empty triple store");
    if (cfg.dim < 1 || cfg.epochs < 1 || cfg.batch_size < 1 || cfg.learning_rate <= 0.0 ||
        cfg.reg_weight < 0.0) {
        throw ConfigError("train_lp: invalid config");
    }
    auto n_entities = static_cast<std::size_t>(store.min_entity_count());
    auto n_relations = static_cast<std::size_t>(store.min_relation_count());
    std::int64_t dim = cfg.dim;

    Embeddings init = init_embeddings(n_entities, n_relations, dim, cfg.seed);
    std::vector<double> ent(init.entity.begin(), init.entity.end());
    std::vector<double> rel(init.relation.begin(), init.relation.end());
    std::vector<double> acc_ent(ent.size(), 0.0);
    std::vector<double> acc_rel(rel.size(), 0.0);
    std::vector<double> grad_ent(ent.size());
    std::vector<double> grad_rel(rel.size());

    Rng rng(derive_seed(cfg.seed, "lp-shuffle"));
    std::vector<std::size_t> order(store.size());
    std::iota(order.begin(), order.end(), 0);

    LpTrainResult result;
    std::size_t step = 0;
    const double eps = 1e-10;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with the deterministic generator.
        for (std::size_t i = order.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i)));
            std::swap(order[i - 1], order[j]);
        }
        double epoch_loss = 0.0;
        std::size_t epoch_triples = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            std::vector<LpBatchItem> batch;
            batch.reserve(end - begin);
            for (std::size_t i = begin; i < end; ++i) {
                LpBatchItem item;
                item.triple = store.triples()[order[i]];
                if (cfg.loss == LpLoss::binary_ce) {
                    item.neg_object =
                        static_cast<EntityId>(rng.uniform_int(static_cast<std::int64_t>(n_entities)));
                    item.neg_subject =
                        static_cast<EntityId>(rng.uniform_int(static_cast<std::int64_t>(n_entities)));
                }
                batch.push_back(item);
            }

            double loss =
                lp_batch_loss(ent, rel, dim, n_entities, batch, cfg.reg_weight, cfg.loss);
            std::fill(grad_ent.begin(), grad_ent.end(), 0.0);
            std::fill(grad_rel.begin(), grad_rel.end(), 0.0);
            lp_batch_grad(ent, rel, dim, n_entities, batch, cfg.reg_weight, cfg.loss, grad_ent,
                          grad_rel);

            if (!std::isfinite(loss)) {
                double max_grad = 0.0;
                for (double g : grad_ent) max_grad = std::max(max_grad, std::abs(g));
                for (double g : grad_rel) max_grad = std::max(max_grad, std::abs(g));
                throw NumericError("train_lp: non-finite loss at step " + std::to_string(step) +
                                   " (batch " + std::to_string(begin / cfg.batch_size) +
                                   "), max |grad| = " + std::to_string(max_grad));
            }

            for (std::size_t i = 0; i < ent.size(); ++i) {
                double g = grad_ent[i];
                if (g == 0.0) continue;
                acc_ent[i] += g * g;
                ent[i] -= cfg.learning_rate * g / (std::sqrt(acc_ent[i]) + eps);
            }
            for (std::size_t i = 0; i < rel.size(); ++i) {
                double g = grad_rel[i];
                if (g == 0.0) continue;
                acc_rel[i] += g * g;
                rel[i] -= cfg.learning_rate * g / (std::sqrt(acc_rel[i]) + eps);
            }

            epoch_loss += loss * static_cast<double>(end - begin);
            epoch_triples += end - begin;
            ++step;
        }
        result.loss_trace.push_back(epoch_loss / static_cast<double>(epoch_triples));
        if (epoch % 50 == 0) {
            log::debug("lp epoch " + std::to_string(epoch) + " loss " +
                       std::to_string(result.loss_trace.back()));
        }
    }

    result.embeddings.dim = dim;
    result.embeddings.n_entities = n_entities;
    result.embeddings.n_relations = n_relations;
    result.embeddings.entity.assign(ent.begin(), ent.end());
    result.embeddings.relation.assign(rel.begin(), rel.end());
    return result;
}

double lp_filtered_mrr(const Embeddings& emb, const TripleStore& store) {
    double rr_sum = 0.0;
    std::size_t count = 0;
    for (const auto& tr : store.triples()) {
        auto scores = score_all_objects(emb, tr.p, tr.s);
        const auto& true_objects = store.neighbors(tr.s, tr.p, Direction::forward);
        double target = scores[static_cast<std::size_t>(tr.o)];
        std::size_t above = 0, ties = 0;
        for (std::size_t o = 0; o < scores.size(); ++o) {
            if (o == static_cast<std::size_t>(tr.o)) continue;
            if (std::binary_search(true_objects.begin(), true_objects.end(),
                                   static_cast<EntityId>(o))) {
                continue;  // filtered: other known objects do not compete
            }
            if (scores[o] > target) ++above;
            else if (scores[o] == target) ++ties;
        }
        double rank = 1.0 + static_cast<double>(above) + 0.5 * static_cast<double>(ties);
        rr_sum += 1.0 / rank;
        ++count;
    }
    return count == 0 ? 0.0 : rr_sum / static_cast<double>(count);
}

}  // namespace cqda
