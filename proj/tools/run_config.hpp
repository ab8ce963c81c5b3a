#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cqda/adapter_trainer.hpp"
#include "cqda/engine.hpp"
#include "cqda/lp_trainer.hpp"

namespace cqda::cli {

// One JSON document carries every module config; command-line flags override
// individual fields. `format_version` guards future layout changes.
struct RunConfig {
    std::uint64_t seed = 1;
    int threads = 1;

    struct Paths {
        std::string train, valid, test;
        std::string entities, relations;
        std::string checkpoint, adapter;
        std::string queries, report;
    } paths;

    struct Lp {
        std::int64_t dim = 64;
        std::size_t epochs = 100;
        std::size_t batch_size = 128;
        double learning_rate = 0.1;
        double reg_weight = 1e-3;
        std::string loss = "one_vs_all";
    } lp;

    struct Adapter {
        std::string variant = "predicate";
        std::size_t steps = 1000;
        double learning_rate = 0.1;
        std::size_t batch_size = 128;
        std::string loss = "one_vs_all";
        double fraction = 1.0;
        std::vector<std::string> train_types = {"2i", "3i", "2in", "3in"};
        std::int64_t hidden = 8;
    } adapter;

    struct Engine {
        std::int64_t beam_width = 512;
        std::string tnorm = "product";
        std::string negation = "standard";
        std::string normalize = "sigmoid";
    } engine;

    struct Gen {
        std::size_t per_structure = 50;
        std::vector<std::string> structures;  // empty = all 14
        std::size_t max_answers = 100;
        std::size_t retry_budget = 1000;
        bool allow_empty_hard = false;
    } gen;
};

RunConfig load_run_config(const std::string& path);

// Derived per-subcommand seeds, so pipeline stages never share a stream.
inline std::uint64_t component_seed(const RunConfig& cfg, const char* tag) {
    return derive_seed(cfg.seed, tag);
}

EngineConfig make_engine_config(const RunConfig& cfg);
LpTrainConfig make_lp_config(const RunConfig& cfg);
AdapterTrainConfig make_adapter_config(const RunConfig& cfg);

}  // namespace cqda::cli
