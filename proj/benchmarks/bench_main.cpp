#include <benchmark/benchmark.h>

#include "cqda/engine.hpp"
#include "cqda/eval.hpp"
#include "cqda/fuzzy.hpp"
#include "cqda/rng.hpp"

namespace {

using namespace cqda;

std::vector<double> unit_scores(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = rng.uniform();
    return out;
}

void BM_tnorm_fold(benchmark::State& state) {
    FuzzyConfig cfg{static_cast<TNormKind>(state.range(0)), NegationKind::standard};
    auto xs = unit_scores(1024, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(tnorm_fold(cfg, xs));
    }
}
BENCHMARK(BM_tnorm_fold)->Arg(0)->Arg(1)->Arg(2);

void BM_score_all_objects(benchmark::State& state) {
    auto n = static_cast<std::size_t>(state.range(0));
    auto emb = init_embeddings(n, 4, 64, 7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(score_all_objects(emb, 1, 3));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_score_all_objects)->Arg(1000)->Arg(10000);

void BM_normalize(benchmark::State& state) {
    auto kind = static_cast<NormalizeKind>(state.range(0));
    Rng rng(3);
    std::vector<double> raw(10000);
    for (auto& v : raw) v = rng.normal() * 4.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(normalize(raw, kind));
    }
}
BENCHMARK(BM_normalize)->Arg(0)->Arg(1);

struct BeamFixture {
    Vocab vocab;
    Embeddings emb;
    DnfQuery q2p;
    BeamFixture() {
        for (int i = 0; i < 2000; ++i) vocab.add_entity("e" + std::to_string(i));
        vocab.add_relation("r");
        vocab.add_relation("s");
        emb = init_embeddings(vocab, 32, 11);
        for (auto& v : emb.entity) v *= 400.0f;
        for (auto& v : emb.relation) v *= 400.0f;
        q2p = to_dnf(parse_query("?T : r(e0,V) & s(V,T)"));
    }
};

void BM_answer_beam_2p(benchmark::State& state) {
    static BeamFixture f;
    EngineConfig cfg;
    cfg.beam_width = state.range(0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(answer_beam(f.emb, f.vocab, cfg, f.q2p));
    }
}
BENCHMARK(BM_answer_beam_2p)->Arg(16)->Arg(128)->Arg(1024);

void BM_filtered_rank(benchmark::State& state) {
    auto scores = unit_scores(static_cast<std::size_t>(state.range(0)), 9);
    std::vector<EntityId> easy = {3, 10, 57};
    std::vector<EntityId> hard = {5, 42};
    for (auto _ : state) {
        benchmark::DoNotOptimize(filtered_rank(scores, 42, easy, hard));
    }
}
BENCHMARK(BM_filtered_rank)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
