#include "run_config.hpp"

#include "cqda/errors.hpp"
#include "cqda/io_util.hpp"

namespace cqda::cli {

namespace {

using json = nlohmann::json;

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    if (j.contains("format_version") && j.at("format_version").get<int>() != 1) {
        throw ConfigError("config " + path + ": unsupported format_version");
    }
    RunConfig cfg;
    maybe(j, "seed", cfg.seed);
    maybe(j, "threads", cfg.threads);
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        maybe(p, "train", cfg.paths.train);
        maybe(p, "valid", cfg.paths.valid);
        maybe(p, "test", cfg.paths.test);
        maybe(p, "entities", cfg.paths.entities);
        maybe(p, "relations", cfg.paths.relations);
        maybe(p, "checkpoint", cfg.paths.checkpoint);
        maybe(p, "adapter", cfg.paths.adapter);
        maybe(p, "queries", cfg.paths.queries);
        maybe(p, "report", cfg.paths.report);
    }
    if (j.contains("lp")) {
        const auto& p = j.at("lp");
        maybe(p, "dim", cfg.lp.dim);
        maybe(p, "epochs", cfg.lp.epochs);
        maybe(p, "batch_size", cfg.lp.batch_size);
        maybe(p, "learning_rate", cfg.lp.learning_rate);
        maybe(p, "reg_weight", cfg.lp.reg_weight);
        maybe(p, "loss", cfg.lp.loss);
    }
    if (j.contains("adapter")) {
        const auto& p = j.at("adapter");
        maybe(p, "variant", cfg.adapter.variant);
        maybe(p, "steps", cfg.adapter.steps);
        maybe(p, "learning_rate", cfg.adapter.learning_rate);
        maybe(p, "batch_size", cfg.adapter.batch_size);
        maybe(p, "loss", cfg.adapter.loss);
        maybe(p, "fraction", cfg.adapter.fraction);
        maybe(p, "train_types", cfg.adapter.train_types);
        maybe(p, "hidden", cfg.adapter.hidden);
    }
    if (j.contains("engine")) {
        const auto& p = j.at("engine");
        maybe(p, "beam_width", cfg.engine.beam_width);
        maybe(p, "tnorm", cfg.engine.tnorm);
        maybe(p, "negation", cfg.engine.negation);
        maybe(p, "normalize", cfg.engine.normalize);
    }
    if (j.contains("gen")) {
        const auto& p = j.at("gen");
        maybe(p, "per_structure", cfg.gen.per_structure);
        maybe(p, "structures", cfg.gen.structures);
        maybe(p, "max_answers", cfg.gen.max_answers);
        maybe(p, "retry_budget", cfg.gen.retry_budget);
        maybe(p, "allow_empty_hard", cfg.gen.allow_empty_hard);
    }
    return cfg;
}

EngineConfig make_engine_config(const RunConfig& cfg) {
    EngineConfig out;
    out.fuzzy.tnorm = tnorm_from_string(cfg.engine.tnorm);
    out.fuzzy.negation = negation_from_string(cfg.engine.negation);
    out.normalize = normalize_from_string(cfg.engine.normalize);
    out.beam_width = cfg.engine.beam_width;
    return out;
}

LpTrainConfig make_lp_config(const RunConfig& cfg) {
    LpTrainConfig out;
    out.dim = cfg.lp.dim;
    out.epochs = cfg.lp.epochs;
    out.batch_size = cfg.lp.batch_size;
    out.learning_rate = cfg.lp.learning_rate;
    out.reg_weight = cfg.lp.reg_weight;
    out.loss = lp_loss_from_string(cfg.lp.loss);
    out.seed = component_seed(cfg, "train-lp");
    return out;
}

AdapterTrainConfig make_adapter_config(const RunConfig& cfg) {
    AdapterTrainConfig out;
    out.train_types.clear();
    for (const auto& name : cfg.adapter.train_types) {
        out.train_types.push_back(structure_from_string(name));
    }
    out.steps = cfg.adapter.steps;
    out.learning_rate = cfg.adapter.learning_rate;
    out.batch_size = cfg.adapter.batch_size;
    out.loss = lp_loss_from_string(cfg.adapter.loss);
    out.fraction = cfg.adapter.fraction;
    out.seed = component_seed(cfg, "train-adapter");
    out.variant = adapter_variant_from_string(cfg.adapter.variant);
    out.hidden = cfg.adapter.hidden;
    out.fuzzy.tnorm = tnorm_from_string(cfg.engine.tnorm);
    out.fuzzy.negation = negation_from_string(cfg.engine.negation);
    out.normalize = normalize_from_string(cfg.engine.normalize);
    return out;
}

}  // namespace cqda::cli
