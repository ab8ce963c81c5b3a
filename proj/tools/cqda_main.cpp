#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cqda/checkpoint.hpp"
#include "cqda/errors.hpp"
#include "cqda/eval.hpp"
#include "cqda/io_util.hpp"
#include "cqda/log.hpp"
#include "run_config.hpp"

namespace {

using cqda::cli::RunConfig;
using json = nlohmann::json;

cqda::Vocab load_vocab_or_fail(const RunConfig& cfg) {
    if (cfg.paths.entities.empty() || cfg.paths.relations.empty()) {
        throw cqda::ConfigError("entity/relation vocab paths are required "
                                "(--entities/--relations or config paths)");
    }
    return cqda::Vocab::load(cfg.paths.entities, cfg.paths.relations);
}

cqda::TripleStore load_frozen(const std::string& path, const cqda::Vocab& vocab) {
    if (path.empty()) throw cqda::ConfigError("missing triple file path");
    auto [store, v] = cqda::load_triples(path, vocab, /*allow_extend=*/false);
    return std::move(store);
}

cqda::TripleStore load_frozen_merged(const std::vector<std::string>& paths,
                                     const cqda::Vocab& vocab) {
    if (paths.empty()) throw cqda::ConfigError("missing triple file paths");
    auto [store, v] = cqda::load_triples_merged(paths, vocab, /*allow_extend=*/false);
    return std::move(store);
}

int cmd_build_vocab(const RunConfig& cfg) {
    std::vector<std::string> files;
    for (const auto& p : {cfg.paths.train, cfg.paths.valid, cfg.paths.test}) {
        if (!p.empty()) files.push_back(p);
    }
    if (files.empty()) {
        throw cqda::ConfigError("build-vocab needs at least one of --train/--valid/--test");
    }
    auto [store, vocab] = cqda::load_triples_merged(files);
    cqda::atomic_write(cfg.paths.entities, vocab.entities_to_tsv());
    cqda::atomic_write(cfg.paths.relations, vocab.relations_to_tsv());
    std::cout << "entities: " << vocab.n_entities() << "\nrelations: " << vocab.n_relations()
              << "\ntriples: " << store.size() << " (" << store.duplicates_dropped()
              << " duplicates dropped)\n";
    return 0;
}

int cmd_train_lp(const RunConfig& cfg) {
    auto vocab = load_vocab_or_fail(cfg);
    auto store = load_frozen(cfg.paths.train, vocab);
    auto lp_cfg = cqda::cli::make_lp_config(cfg);
    auto result = cqda::train_lp(store, lp_cfg);
    cqda::save_checkpoint(cfg.paths.checkpoint, result.embeddings, cqda::vocab_sha256(vocab));
    double mrr = cqda::lp_filtered_mrr(result.embeddings, store);
    std::cout << "final loss: " << result.loss_trace.back() << "\ntrain 1p MRR: " << mrr
              << "\ncheckpoint: " << cfg.paths.checkpoint << "\n";
    return 0;
}

int cmd_gen_queries(const RunConfig& cfg, const std::vector<std::string>& observed,
                    const std::vector<std::string>& full) {
    auto vocab = load_vocab_or_fail(cfg);
    auto observed_store = load_frozen_merged(observed, vocab);
    auto full_store = load_frozen_merged(full, vocab);

    std::vector<cqda::Structure> structures;
    if (cfg.gen.structures.empty()) {
        structures = cqda::all_structures();
    } else {
        for (const auto& name : cfg.gen.structures) {
            structures.push_back(cqda::structure_from_string(name));
        }
    }

    cqda::GenConfig gen;
    gen.max_answers = cfg.gen.max_answers;
    gen.retry_budget = cfg.gen.retry_budget;
    gen.require_hard = !cfg.gen.allow_empty_hard;

    std::vector<cqda::QueryInstance> all;
    for (cqda::Structure s : structures) {
        cqda::Rng rng(cqda::derive_seed(cqda::cli::component_seed(cfg, "gen-queries"),
                                        cqda::to_string(s)));
        auto batch = cqda::generate_instances(full_store, observed_store, vocab, s,
                                              cfg.gen.per_structure, rng, gen);
        all.insert(all.end(), batch.begin(), batch.end());
    }
    cqda::save_instances_jsonl(cfg.paths.queries, all, vocab);
    std::cout << "generated " << all.size() << " instances -> " << cfg.paths.queries << "\n";
    return 0;
}

int cmd_train_adapter(const RunConfig& cfg, const std::string& log_path) {
    auto vocab = load_vocab_or_fail(cfg);
    auto ckpt = cqda::load_checkpoint(cfg.paths.checkpoint);
    if (ckpt.vocab_sha256 != cqda::vocab_sha256(vocab)) {
        cqda::log::warn("vocab hash does not match the checkpoint's vocab_sha256");
    }
    auto queries = cqda::load_instances_jsonl(cfg.paths.queries, vocab);
    auto train_cfg = cqda::cli::make_adapter_config(cfg);

    std::ostringstream csv;
    csv << "step,loss,grad_norm,wall_ms\n";
    auto result = cqda::train_adapter(ckpt.embeddings, vocab, queries, train_cfg, &csv);
    if (!log_path.empty()) cqda::atomic_write(log_path, csv.str());

    cqda::save_adapter_checkpoint(cfg.paths.adapter, result.adapter,
                                  cqda::sha256_file(cfg.paths.checkpoint));
    std::cout << "steps: " << train_cfg.steps << "\nfinal loss: " << result.trace.back().second
              << "\nadapter (" << cqda::to_string(result.adapter.variant)
              << ", " << result.adapter.param_count() << " parameters): " << cfg.paths.adapter
              << "\n";
    return 0;
}

struct LoadedModel {
    cqda::Vocab vocab;
    cqda::Embeddings embeddings;
    cqda::AdapterParams adapter;
    bool has_adapter = false;
    std::string adapter_sha;
};

LoadedModel load_model(const RunConfig& cfg) {
    LoadedModel m{load_vocab_or_fail(cfg), {}, {}, false, {}};
    auto ckpt = cqda::load_checkpoint(cfg.paths.checkpoint);
    m.embeddings = std::move(ckpt.embeddings);
    if (!cfg.paths.adapter.empty()) {
        auto actual = cqda::sha256_file(cfg.paths.checkpoint);
        auto adapter_ckpt = cqda::load_adapter_checkpoint(cfg.paths.adapter);
        if (adapter_ckpt.backbone_sha256 != actual) {
            cqda::log::warn("adapter was trained against a different backbone checkpoint");
        }
        m.adapter = std::move(adapter_ckpt.adapter);
        m.has_adapter = true;
        m.adapter_sha = cqda::sha256_file(cfg.paths.adapter);
    } else if (ckpt.adapter.has_value()) {
        m.adapter = std::move(*ckpt.adapter);
        m.has_adapter = true;
        m.adapter_sha = "embedded";
    }
    return m;
}

int cmd_answer(const RunConfig& cfg, const std::vector<std::string>& query_texts,
               std::size_t topk, const std::string& out_path) {
    auto model = load_model(cfg);
    auto engine = cqda::cli::make_engine_config(cfg);
    if (model.has_adapter) engine.adapter = &model.adapter;

    std::vector<std::pair<std::string, cqda::QueryAst>> queries;
    if (!query_texts.empty()) {
        for (std::size_t i = 0; i < query_texts.size(); ++i) {
            queries.emplace_back("q" + std::to_string(i), cqda::parse_query(query_texts[i]));
        }
    } else if (!cfg.paths.queries.empty()) {
        for (auto& inst : cqda::load_instances_jsonl(cfg.paths.queries, model.vocab)) {
            queries.emplace_back(inst.id, inst.query);
        }
    } else {
        throw cqda::ConfigError("answer needs --query or a queries file");
    }

    std::ostringstream out;
    for (const auto& [id, ast] : queries) {
        auto dnf = cqda::to_dnf(ast);
        auto scores = cqda::answer_beam(model.embeddings, model.vocab, engine, dnf);
        std::vector<std::size_t> order(scores.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return a < b;
        });
        json top = json::array();
        for (std::size_t i = 0; i < std::min(topk, order.size()); ++i) {
            top.push_back({{"entity", model.vocab.entity_label(
                                          static_cast<cqda::EntityId>(order[i]))},
                           {"score", scores[order[i]]}});
        }
        json line = {{"query_id", id},          {"top", top},
                     {"k", cfg.engine.beam_width}, {"tnorm", cfg.engine.tnorm},
                     {"negation", cfg.engine.negation}, {"normalize", cfg.engine.normalize}};
        out << line.dump() << '\n';
    }
    if (out_path.empty()) {
        std::cout << out.str();
    } else {
        cqda::atomic_write(out_path, out.str());
    }
    return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
    auto model = load_model(cfg);
    auto engine = cqda::cli::make_engine_config(cfg);
    if (model.has_adapter) engine.adapter = &model.adapter;
    auto instances = cqda::load_instances_jsonl(cfg.paths.queries, model.vocab);
    auto report = cqda::evaluate(model.embeddings, model.vocab, engine, instances, cfg.threads);
    report.adapter_sha256 = model.adapter_sha;
    std::cout << cqda::report_to_table(report);
    if (!cfg.paths.report.empty()) {
        cqda::atomic_write(cfg.paths.report, cqda::report_to_json(report));
        std::cout << "report: " << cfg.paths.report << "\n";
    }
    return 0;
}

int cmd_inspect(const std::string& path) {
    std::cout << cqda::inspect_checkpoint(path);
    return 0;
}

std::string find_config_arg(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) return argv[i + 1];
        if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
    }
    return "";
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    try {
        std::string config_path = find_config_arg(argc, argv);
        if (!config_path.empty()) cfg = cqda::cli::load_run_config(config_path);
    } catch (const cqda::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    CLI::App app{"complex query answering over incomplete knowledge graphs"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config document (flags override it)");

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config document (flags override it)");
        sub->add_option("--seed", cfg.seed, "root seed (per-stage seeds derive from it)");
        sub->add_option("--threads", cfg.threads, "read-parallel inference threads");
        sub->add_option("--entities", cfg.paths.entities, "entity2id.txt path");
        sub->add_option("--relations", cfg.paths.relations, "relation2id.txt path");
    };

    // build-vocab
    auto* sub_vocab = app.add_subcommand("build-vocab", "index entity/relation labels");
    add_common(sub_vocab);
    sub_vocab->add_option("--train", cfg.paths.train, "training triples (TSV)");
    sub_vocab->add_option("--valid", cfg.paths.valid, "validation triples (TSV)");
    sub_vocab->add_option("--test", cfg.paths.test, "test triples (TSV)");

    // train-lp
    auto* sub_lp = app.add_subcommand("train-lp", "train the link predictor");
    add_common(sub_lp);
    sub_lp->add_option("--train", cfg.paths.train, "training triples (TSV)");
    sub_lp->add_option("--ckpt", cfg.paths.checkpoint, "output checkpoint path");
    sub_lp->add_option("--dim", cfg.lp.dim, "embedding dimension");
    sub_lp->add_option("--epochs", cfg.lp.epochs, "training epochs");
    sub_lp->add_option("--batch-size", cfg.lp.batch_size, "batch size");
    sub_lp->add_option("--lr", cfg.lp.learning_rate, "Adagrad learning rate");
    sub_lp->add_option("--reg", cfg.lp.reg_weight, "N3 regularization weight");
    sub_lp->add_option("--loss", cfg.lp.loss, "one_vs_all|binary_ce");

    // gen-queries
    auto* sub_gen = app.add_subcommand("gen-queries", "sample query instances with easy/hard splits");
    add_common(sub_gen);
    std::vector<std::string> observed_paths, full_paths;
    sub_gen->add_option("--observed", observed_paths, "observed-graph TSV files")
        ->delimiter(',');
    sub_gen->add_option("--full", full_paths, "full-graph TSV files")->delimiter(',');
    sub_gen->add_option("--out", cfg.paths.queries, "output JSONL path");
    sub_gen->add_option("--structures", cfg.gen.structures, "structure names (default: all 14)")
        ->delimiter(',');
    sub_gen->add_option("--per-structure", cfg.gen.per_structure, "instances per structure");
    sub_gen->add_option("--max-answers", cfg.gen.max_answers, "answer-count cap");
    sub_gen->add_option("--retry-budget", cfg.gen.retry_budget, "grounding attempts per instance");
    sub_gen->add_flag("--allow-empty-hard", cfg.gen.allow_empty_hard,
                      "keep instances with no hard answers (training splits)");

    // train-adapter
    auto* sub_adapter = app.add_subcommand("train-adapter", "train the score adapter");
    add_common(sub_adapter);
    std::string adapter_log;
    sub_adapter->add_option("--ckpt", cfg.paths.checkpoint, "backbone checkpoint");
    sub_adapter->add_option("--queries", cfg.paths.queries, "training query JSONL");
    sub_adapter->add_option("--out", cfg.paths.adapter, "output adapter checkpoint");
    sub_adapter->add_option("--steps", cfg.adapter.steps, "optimization steps");
    sub_adapter->add_option("--lr", cfg.adapter.learning_rate, "Adagrad learning rate");
    sub_adapter->add_option("--batch-size", cfg.adapter.batch_size, "batch size");
    sub_adapter->add_option("--loss", cfg.adapter.loss, "one_vs_all|binary_ce");
    sub_adapter->add_option("--fraction", cfg.adapter.fraction,
                            "training-query subsample fraction in (0,1]");
    sub_adapter->add_option("--train-types", cfg.adapter.train_types,
                            "query types to train on")
        ->delimiter(',');
    sub_adapter->add_option("--adapter-variant", cfg.adapter.variant,
                            "global|predicate|predicate-source|mlp1|mlp2");
    sub_adapter->add_option("--hidden", cfg.adapter.hidden, "mlp hidden width");
    sub_adapter->add_option("--tnorm", cfg.engine.tnorm, "godel|product|lukasiewicz");
    sub_adapter->add_option("--negation", cfg.engine.negation, "standard|cosine");
    sub_adapter->add_option("--normalize", cfg.engine.normalize, "sigmoid|minmax");
    sub_adapter->add_option("--log", adapter_log, "training log CSV path");

    // answer
    auto* sub_answer = app.add_subcommand("answer", "answer queries with beam search");
    add_common(sub_answer);
    std::vector<std::string> query_texts;
    std::size_t topk = 10;
    std::string answer_out;
    sub_answer->add_option("--ckpt", cfg.paths.checkpoint, "backbone checkpoint");
    sub_answer->add_option("--adapter", cfg.paths.adapter, "adapter checkpoint");
    sub_answer->add_option("--query", query_texts, "query text (repeatable)");
    sub_answer->add_option("--queries", cfg.paths.queries, "query JSONL file");
    sub_answer->add_option("--beam", cfg.engine.beam_width, "beam width k");
    sub_answer->add_option("--tnorm", cfg.engine.tnorm, "godel|product|lukasiewicz");
    sub_answer->add_option("--negation", cfg.engine.negation, "standard|cosine");
    sub_answer->add_option("--normalize", cfg.engine.normalize, "sigmoid|minmax");
    sub_answer->add_option("--topk", topk, "entities per emitted answer line");
    sub_answer->add_option("--out", answer_out, "output path (default stdout)");

    // evaluate
    auto* sub_eval = app.add_subcommand("evaluate", "filtered-MRR evaluation report");
    add_common(sub_eval);
    sub_eval->add_option("--ckpt", cfg.paths.checkpoint, "backbone checkpoint");
    sub_eval->add_option("--adapter", cfg.paths.adapter, "adapter checkpoint");
    sub_eval->add_option("--queries", cfg.paths.queries, "evaluation query JSONL");
    sub_eval->add_option("--beam", cfg.engine.beam_width, "beam width k");
    sub_eval->add_option("--tnorm", cfg.engine.tnorm, "godel|product|lukasiewicz");
    sub_eval->add_option("--negation", cfg.engine.negation, "standard|cosine");
    sub_eval->add_option("--normalize", cfg.engine.normalize, "sigmoid|minmax");
    sub_eval->add_option("--report", cfg.paths.report, "report JSON output path");

    // inspect-ckpt
    auto* sub_inspect = app.add_subcommand("inspect-ckpt", "print checkpoint header and shapes");
    std::string inspect_path;
    sub_inspect->add_option("path", inspect_path, "checkpoint file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (sub_vocab->parsed()) return cmd_build_vocab(cfg);
        if (sub_lp->parsed()) return cmd_train_lp(cfg);
        if (sub_gen->parsed()) return cmd_gen_queries(cfg, observed_paths, full_paths);
        if (sub_adapter->parsed()) return cmd_train_adapter(cfg, adapter_log);
        if (sub_answer->parsed()) return cmd_answer(cfg, query_texts, topk, answer_out);
        if (sub_eval->parsed()) return cmd_evaluate(cfg);
        if (sub_inspect->parsed()) return cmd_inspect(inspect_path);
        std::cerr << app.help();
        return 1;
    } catch (const cqda::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
