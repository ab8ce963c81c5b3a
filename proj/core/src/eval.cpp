#include "cqda/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "cqda/errors.hpp"
#include "cqda/io_util.hpp"

namespace cqda {

namespace {

using json = nlohmann::json;

bool sorted_contains(const std::vector<EntityId>& v, EntityId e) {
    return std::binary_search(v.begin(), v.end(), e);
}

}  // namespace

double filtered_rank(std::span<const double> scores, EntityId target,
                     const std::vector<EntityId>& easy, const std::vector<EntityId>& hard) {
    if (!sorted_contains(hard, target)) {
        throw ContractError("filtered_rank: target is not a hard answer");
    }
    for (EntityId e : easy) {
        if (sorted_contains(hard, e)) {
            throw ContractError("filtered_rank: easy and hard sets overlap");
        }
    }
    double target_score = scores[static_cast<std::size_t>(target)];
    std::size_t above = 0, ties = 0;
    for (std::size_t e = 0; e < scores.size(); ++e) {
        auto id = static_cast<EntityId>(e);
        if (id == target) continue;
        if (sorted_contains(easy, id) || sorted_contains(hard, id)) continue;
        if (scores[e] > target_score) ++above;
        else if (scores[e] == target_score) ++ties;
    }
    return 1.0 + static_cast<double>(above) + 0.5 * static_cast<double>(ties);
}

EvalReport evaluate(const Embeddings& emb, const Vocab& vocab, const EngineConfig& cfg,
                    const std::vector<QueryInstance>& instances, int threads) {
    if (instances.empty()) throw ConfigError("evaluate: empty instance list");
    for (const auto& inst : instances) {
        if (inst.hard.empty()) {
            throw ContractError("evaluate: instance " + inst.id + " has no hard answers");
        }
    }

    // Reciprocal-rank lists per instance, computed independently (and
    // optionally in parallel), then reduced in instance order.
    std::vector<std::vector<double>> rr(instances.size());
    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            DnfQuery dnf = to_dnf(instances[i].query);
            auto scores = answer_beam(emb, vocab, cfg, dnf);
            rr[i].reserve(instances[i].hard.size());
            for (EntityId h : instances[i].hard) {
                rr[i].push_back(1.0 /
                                filtered_rank(scores, h, instances[i].easy, instances[i].hard));
            }
        }
    };
    int n_threads = std::max(1, threads);
    if (n_threads == 1) {
        worker(0, instances.size());
    } else {
        std::vector<std::thread> pool;
        std::size_t chunk = (instances.size() + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            std::size_t begin = static_cast<std::size_t>(t) * chunk;
            std::size_t end = std::min(instances.size(), begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    struct Acc {
        double rr_sum = 0.0;
        std::size_t pairs = 0;
        std::size_t queries = 0;
    };
    std::map<std::string, Acc> acc;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        auto& a = acc[to_string(instances[i].structure)];
        ++a.queries;
        for (double r : rr[i]) {
            a.rr_sum += r;
            ++a.pairs;
        }
    }

    EvalReport report;
    for (const auto& [name, a] : acc) {
        report.per_structure[name] =
            StructureStats{a.rr_sum / static_cast<double>(a.pairs), a.queries, a.pairs};
    }
    auto macro_avg = [&](const std::vector<Structure>& group) -> std::optional<double> {
        double sum = 0.0;
        std::size_t n = 0;
        for (Structure s : group) {
            auto it = report.per_structure.find(to_string(s));
            if (it == report.per_structure.end()) continue;
            sum += it->second.mrr;
            ++n;
        }
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    };
    report.avg_p = macro_avg(epfo_structures());
    report.avg_n = macro_avg(negation_structures());
    report.beam_width = cfg.beam_width;
    report.tnorm = to_string(cfg.fuzzy.tnorm);
    report.negation = to_string(cfg.fuzzy.negation);
    report.normalize = to_string(cfg.normalize);
    return report;
}

std::string report_to_json(const EvalReport& report) {
    json j;
    j["format_version"] = 1;
    j["config"] = {{"beam_width", report.beam_width},
                   {"tnorm", report.tnorm},
                   {"negation", report.negation},
                   {"normalize", report.normalize},
                   {"adapter_sha256", report.adapter_sha256},
                   {"avg_kind", report.avg_kind}};
    j["config_sha256"] = sha256_hex(j["config"].dump());
    json structures = json::object();
    for (const auto& [name, s] : report.per_structure) {
        structures[name] = {{"mrr", s.mrr}, {"queries", s.queries},
                            {"hard_answers", s.hard_answers}};
    }
    j["structures"] = structures;
    if (report.avg_p.has_value()) j["avg_p"] = *report.avg_p;
    if (report.avg_n.has_value()) j["avg_n"] = *report.avg_n;
    return j.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& report) {
    std::ostringstream out;
    auto fmt = [](double v) {
        std::ostringstream ss;
        ss.setf(std::ios::fixed);
        ss.precision(3);
        ss << v;
        return ss.str();
    };
    out << "structure";
    for (Structure s : all_structures()) out << '\t' << to_string(s);
    out << "\tavg_p\tavg_n\n";
    out << "mrr";
    for (Structure s : all_structures()) {
        auto it = report.per_structure.find(to_string(s));
        out << '\t' << (it == report.per_structure.end() ? "-" : fmt(it->second.mrr));
    }
    out << '\t' << (report.avg_p.has_value() ? fmt(*report.avg_p) : "-");
    out << '\t' << (report.avg_n.has_value() ? fmt(*report.avg_n) : "-");
    out << '\n';
    return out.str();
}

bool reports_metrics_equal(const EvalReport& a, const EvalReport& b) {
    if (a.per_structure.size() != b.per_structure.size()) return false;
    for (const auto& [name, sa] : a.per_structure) {
        auto it = b.per_structure.find(name);
        if (it == b.per_structure.end()) return false;
        if (sa.mrr != it->second.mrr || sa.queries != it->second.queries ||
            sa.hard_answers != it->second.hard_answers) {
            return false;
        }
    }
    return a.avg_p == b.avg_p && a.avg_n == b.avg_n && a.beam_width == b.beam_width &&
           a.tnorm == b.tnorm && a.negation == b.negation && a.normalize == b.normalize;
}

}  // namespace cqda
