#include <doctest.h>

#include <array>
#include <cstdio>
#include <fstream>

#include "cqda/io_util.hpp"
#include "test_helpers.hpp"

#ifndef CQDA_CLI_PATH
#define CQDA_CLI_PATH "cqda"
#endif

using cqda::test::TempDir;

namespace {

struct RunResult {
    int exit_code;
    std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    // popen runs through sh, so an env assignment prefix works
    std::string cmd = env_prefix + std::string(CQDA_CLI_PATH) + " " + args + " 2>&1";
    std::array<char, 4096> buf{};
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (fgets(buf.data(), buf.size(), pipe) != nullptr) out += buf.data();
    int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

// Writes a small pipeline workspace: toy triples + vocab.
struct Workspace {
    TempDir dir{"cli"};
    std::string train, valid, test, entities, relations;

    Workspace() {
        train = cqda::test::data_path("toy/train.tsv");
        valid = cqda::test::data_path("toy/valid.tsv");
        test = cqda::test::data_path("toy/test.tsv");
        entities = dir.file("entity2id.txt");
        relations = dir.file("relation2id.txt");
        auto r = run_cli("build-vocab --train " + train + " --valid " + valid + " --test " +
                         test + " --entities " + entities + " --relations " + relations);
        REQUIRE(r.exit_code == 0);
    }

    std::string vocab_flags() const {
        return " --entities " + entities + " --relations " + relations;
    }
};

}  // namespace

TEST_CASE("unknown subcommands and flags exit 1 with usage text") {
    auto r = run_cli("frobnicate");
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("Usage") != std::string::npos);
    auto r2 = run_cli("train-lp --no-such-flag 3");
    CHECK(r2.exit_code == 1);
}

TEST_CASE("missing checkpoint exits 1 and names the path") {
    Workspace ws;
    auto r = run_cli("answer --ckpt " + ws.dir.file("nope.ckpt") + ws.vocab_flags() +
                     " --query \"?T : works_at(n00,T)\"");
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("nope.ckpt") != std::string::npos);
}

TEST_CASE("toy pipeline end-to-end") {
    Workspace ws;
    std::string ckpt = ws.dir.file("backbone.ckpt");

    auto train = run_cli("train-lp --train " + ws.train + ws.vocab_flags() + " --ckpt " + ckpt +
                         " --dim 16 --epochs 60 --batch-size 32 --lr 0.1 --reg 1e-4 --seed 7");
    REQUIRE(train.exit_code == 0);
    CHECK(train.output.find("train 1p MRR") != std::string::npos);

    auto inspect = run_cli("inspect-ckpt " + ckpt);
    CHECK(inspect.exit_code == 0);
    CHECK(inspect.output.find("\"dim\": 16") != std::string::npos);
    CHECK(inspect.output.find("(frozen)") != std::string::npos);

    std::string queries = ws.dir.file("queries.jsonl");
    auto gen = run_cli("gen-queries --observed " + ws.train + " --full " + ws.train + "," +
                       ws.valid + ws.vocab_flags() + " --out " + queries +
                       " --structures 1p,2i,2in --per-structure 4 --seed 7");
    REQUIRE(gen.exit_code == 0);

    std::string train_queries = ws.dir.file("train_queries.jsonl");
    auto gen2 = run_cli("gen-queries --observed " + ws.train + " --full " + ws.train +
                        ws.vocab_flags() + " --out " + train_queries +
                        " --structures 2i,2in --per-structure 8 --seed 9 --allow-empty-hard");
    REQUIRE(gen2.exit_code == 0);

    std::string adapter = ws.dir.file("adapter.ckpt");
    auto tr = run_cli("train-adapter --ckpt " + ckpt + " --queries " + train_queries +
                      ws.vocab_flags() + " --out " + adapter +
                      " --steps 30 --train-types 2i,2in --adapter-variant predicate --seed 7" +
                      " --log " + ws.dir.file("train.csv"));
    REQUIRE(tr.exit_code == 0);
    {
        std::ifstream log(ws.dir.file("train.csv"));
        std::string header;
        std::getline(log, header);
        CHECK(header == "step,loss,grad_norm,wall_ms");
    }

    auto ans = run_cli("answer --ckpt " + ckpt + " --adapter " + adapter + ws.vocab_flags() +
                       " --query \"?T : works_at(n00,V) & friend_of(V,T)\" --beam 30 --topk 3");
    REQUIRE(ans.exit_code == 0);
    CHECK(ans.output.find("\"query_id\":\"q0\"") != std::string::npos);
    CHECK(ans.output.find("\"tnorm\":\"product\"") != std::string::npos);

    auto ev = run_cli("evaluate --ckpt " + ckpt + " --adapter " + adapter + " --queries " +
                      queries + ws.vocab_flags() + " --beam 30 --report " +
                      ws.dir.file("report.json"));
    REQUIRE(ev.exit_code == 0);
    CHECK(ev.output.find("avg_p") != std::string::npos);
    auto report = cqda::read_file(ws.dir.file("report.json"));
    CHECK(report.find("\"avg_kind\": \"macro\"") != std::string::npos);

    // determinism: a second identical evaluate produces byte-identical output
    auto ev2 = run_cli("evaluate --ckpt " + ckpt + " --adapter " + adapter + " --queries " +
                       queries + ws.vocab_flags() + " --beam 30 --report " +
                       ws.dir.file("report2.json"));
    REQUIRE(ev2.exit_code == 0);
    CHECK(cqda::read_file(ws.dir.file("report2.json")) == report);
}

TEST_CASE("CQDA_LOG controls stderr verbosity") {
    Workspace ws;
    std::string ckpt = ws.dir.file("log.ckpt");
    auto train = run_cli("train-lp --train " + ws.train + ws.vocab_flags() + " --ckpt " + ckpt +
                         " --dim 4 --epochs 2 --batch-size 32 --seed 1 --reg 1e-4");
    REQUIRE(train.exit_code == 0);
    std::string answer_args = "answer --ckpt " + ckpt + ws.vocab_flags() +
                              " --query \"?T : works_at(n00,T)\" --topk 1";
    auto quiet = run_cli(answer_args);
    CHECK(quiet.exit_code == 0);
    CHECK(quiet.output.find("[info]") == std::string::npos);
    auto verbose = run_cli(answer_args, "CQDA_LOG=info ");
    CHECK(verbose.exit_code == 0);
    CHECK(verbose.output.find("[info]") != std::string::npos);
}

TEST_CASE("config document supplies defaults and flags override") {
    Workspace ws;
    std::string cfg_path = ws.dir.file("run.json");
    std::string ckpt = ws.dir.file("b.ckpt");
    {
        std::ofstream cfg(cfg_path);
        cfg << R"({"format_version":1,"seed":5,
                   "paths":{"train":")" << ws.train << R"(",
                            "entities":")" << ws.entities << R"(",
                            "relations":")" << ws.relations << R"(",
                            "checkpoint":")" << ckpt << R"("},
                   "lp":{"dim":8,"epochs":5,"batch_size":16,
                         "learning_rate":0.1,"reg_weight":1e-4}})";
    }
    auto r = run_cli("train-lp --config " + cfg_path);
    REQUIRE(r.exit_code == 0);
    auto inspect = run_cli("inspect-ckpt " + ckpt);
    CHECK(inspect.output.find("\"dim\": 8") != std::string::npos);

    // flag wins over the document
    auto r2 = run_cli("train-lp --config " + cfg_path + " --dim 4 --ckpt " + ws.dir.file("c.ckpt"));
    REQUIRE(r2.exit_code == 0);
    auto inspect2 = run_cli("inspect-ckpt " + ws.dir.file("c.ckpt"));
    CHECK(inspect2.output.find("\"dim\": 4") != std::string::npos);

    auto bad = run_cli("train-lp --config " + ws.dir.file("missing.json"));
    CHECK(bad.exit_code == 1);
}
