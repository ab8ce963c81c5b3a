#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cqda/engine.hpp"
#include "cqda/generator.hpp"

namespace cqda {

// Filtered rank of `target` (which must be a hard answer): every other known
// answer (easy or hard) is removed from the competitor pool, and ties count
// as expected rank under random tie-breaking (+0.5 each).
double filtered_rank(std::span<const double> scores, EntityId target,
                     const std::vector<EntityId>& easy, const std::vector<EntityId>& hard);

struct StructureStats {
    double mrr = 0.0;
    std::size_t queries = 0;
    std::size_t hard_answers = 0;
};

struct EvalReport {
    // Keyed by structure name, present only for structures with >= 1 query.
    std::map<std::string, StructureStats> per_structure;
    std::optional<double> avg_p;  // macro mean over the 9 EPFO structures
    std::optional<double> avg_n;  // macro mean over the 5 negation structures
    // config echo
    std::int64_t beam_width = 0;
    std::string tnorm;
    std::string negation;
    std::string normalize;
    std::string adapter_sha256;  // empty = no adapter
    std::string avg_kind = "macro";
};

// One answer_beam call per instance, one filtered rank per hard answer;
// per-structure MRR averages over (instance, hard answer) pairs. Instances
// may be scored in parallel; sums reduce in instance order either way.
EvalReport evaluate(const Embeddings& emb, const Vocab& vocab, const EngineConfig& cfg,
                    const std::vector<QueryInstance>& instances, int threads = 1);

std::string report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);

// Field comparison ignoring the adapter hash echo (the identity adapter must
// reproduce the unadapted report).
bool reports_metrics_equal(const EvalReport& a, const EvalReport& b);

}  // namespace cqda
