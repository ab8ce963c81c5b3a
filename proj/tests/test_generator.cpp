#include <doctest.h>

#include "cqda/errors.hpp"
#include "cqda/generator.hpp"
#include "test_helpers.hpp"

using namespace cqda;
using cqda::test::TempDir;

namespace {

// K4 plus one held-out edge.
std::pair<TripleStore, Vocab> k4_plus(const char* s, const char* p, const char* o) {
    auto [observed, vocab] = cqda::test::load_k4();
    TripleStore full;
    for (const auto& t : observed.triples()) full.insert(t.s, t.p, t.o);
    full.insert(vocab.entity_id(s), vocab.relation_id(p), vocab.entity_id(o));
    full.finalize();
    return {std::move(full), std::move(vocab)};
}

// Every 2p query over the fixture's label space, evaluated on both graphs.
std::vector<std::pair<std::set<EntityId>, std::set<EntityId>>> all_2p_answers(
    const TripleStore& full, const TripleStore& observed, const Vocab& vocab) {
    std::vector<std::pair<std::set<EntityId>, std::set<EntityId>>> out;
    for (std::size_t a = 0; a < vocab.n_entities(); ++a) {
        for (std::size_t r1 = 0; r1 < vocab.n_relations(); ++r1) {
            for (std::size_t r2 = 0; r2 < vocab.n_relations(); ++r2) {
                std::string q = "?T : " + vocab.relation_label(static_cast<RelationId>(r1)) +
                                "(" + vocab.entity_label(static_cast<EntityId>(a)) + ",V) & " +
                                vocab.relation_label(static_cast<RelationId>(r2)) + "(V,T)";
                auto dnf = to_dnf(parse_query(q));
                out.emplace_back(answer_exact(full, vocab, dnf),
                                 answer_exact(observed, vocab, dnf));
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("held-out (c,s,d) leaves no hard 2p answers: d stays reachable via (b,s,d)") {
    auto [observed, vocab] = cqda::test::load_k4();
    auto [full, vocab2] = k4_plus("c", "s", "d");
    for (const auto& [af, ao] : all_2p_answers(full, observed, vocab)) {
        std::set<EntityId> hard;
        std::set_difference(af.begin(), af.end(), ao.begin(), ao.end(),
                            std::inserter(hard, hard.end()));
        CHECK(hard.empty());
    }
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        CHECK_FALSE(instantiate_structure(full, observed, vocab, Structure::s2p, rng)
                        .has_value());
    }
}

TEST_CASE("2p instances pick up a held-out edge that shortcuts no observed path") {
    auto [observed, vocab] = cqda::test::load_k4();
    auto [full, vocab2] = k4_plus("c", "s", "b");
    EntityId b = vocab.entity_id("b");

    bool saw_hard_b = false;
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        auto inst = instantiate_structure(full, observed, vocab, Structure::s2p, rng);
        if (!inst.has_value()) continue;
        CHECK(inst->structure == Structure::s2p);
        CHECK(classify_structure(to_dnf(inst->query)) == Structure::s2p);
        // re-run both oracles: hard must be exactly full \ observed
        auto dnf = to_dnf(inst->query);
        auto af = answer_exact(full, vocab, dnf);
        auto ao = answer_exact(observed, vocab, dnf);
        std::vector<EntityId> hard;
        std::set_difference(af.begin(), af.end(), ao.begin(), ao.end(),
                            std::back_inserter(hard));
        CHECK(inst->hard == hard);
        CHECK(inst->easy == std::vector<EntityId>(ao.begin(), ao.end()));
        if (std::binary_search(inst->hard.begin(), inst->hard.end(), b)) saw_hard_b = true;
    }
    // ?T : r(a,V) & s(V,T) answers b only through the held-out (c,s,b)
    CHECK(saw_hard_b);
}

TEST_CASE("observed == full rejects everything (no missing links)") {
    auto [full, vocab] = k4_plus("c", "s", "b");
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        auto inst = instantiate_structure(full, full, vocab, Structure::s1p, rng);
        CHECK_FALSE(inst.has_value());
    }
}

TEST_CASE("require_hard=false keeps traversal-only instances for training splits") {
    auto [full, vocab] = k4_plus("c", "s", "b");
    GenConfig cfg;
    cfg.require_hard = false;
    Rng rng(6);
    auto inst = instantiate_structure(full, full, vocab, Structure::s1p, rng, cfg);
    REQUIRE(inst.has_value());
    CHECK(inst->hard.empty());
    CHECK_FALSE(inst->easy.empty());
}

TEST_CASE("answer-count cap rejects hub queries") {
    // star graph: one hub with 200 leaves
    Vocab vocab;
    TripleStore full, observed;
    EntityId hub = vocab.add_entity("hub");
    RelationId r = vocab.add_relation("r");
    for (int i = 0; i < 200; ++i) {
        EntityId leaf = vocab.add_entity("leaf" + std::to_string(i));
        full.insert(hub, r, leaf);
        if (i > 0) observed.insert(hub, r, leaf);  // one held-out edge keeps hard nonempty
    }
    full.finalize();
    observed.finalize();
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        auto inst = instantiate_structure(full, observed, vocab, Structure::s1p, rng);
        CHECK_FALSE(inst.has_value());  // 200 answers > 100
    }
}

TEST_CASE("generation exhausts its retry budget on unsatisfiable structures") {
    // a single edge cannot ground a 3p chain
    Vocab vocab;
    TripleStore full;
    full.insert(vocab.add_entity("x"), vocab.add_relation("r"), vocab.add_entity("y"));
    full.finalize();
    Rng rng(8);
    GenConfig cfg;
    cfg.retry_budget = 50;
    CHECK_THROWS_AS(instantiate_structure(full, full, vocab, Structure::s3p, rng, cfg),
                    BudgetError);
}

TEST_CASE("all 14 structures generate on a random graph and verify by oracle") {
    auto [full, vocab] = cqda::test::random_kg(25, 4, 150, 42);
    // observed = full minus every 5th triple
    TripleStore observed;
    std::size_t i = 0;
    for (const auto& t : full.triples()) {
        if (i++ % 5 != 0) observed.insert(t.s, t.p, t.o);
    }
    observed.finalize();

    for (Structure s : all_structures()) {
        CAPTURE(to_string(s));
        Rng rng(derive_seed(99, to_string(s)));
        auto batch = generate_instances(full, observed, vocab, s, 5, rng);
        REQUIRE(batch.size() == 5);
        for (const auto& inst : batch) {
            CHECK(inst.structure == s);
            CHECK(classify_structure(to_dnf(inst.query)) == s);
            CHECK_FALSE(inst.hard.empty());
            CHECK(inst.easy.size() + inst.hard.size() <= 100);
            // easy and hard are disjoint by construction; verify anyway
            std::vector<EntityId> overlap;
            std::set_intersection(inst.easy.begin(), inst.easy.end(), inst.hard.begin(),
                                  inst.hard.end(), std::back_inserter(overlap));
            CHECK(overlap.empty());
            auto dnf = to_dnf(inst.query);
            auto af = answer_exact(full, vocab, dnf);
            auto ao = answer_exact(observed, vocab, dnf);
            std::vector<EntityId> hard;
            std::set_difference(af.begin(), af.end(), ao.begin(), ao.end(),
                                std::back_inserter(hard));
            CHECK(inst.hard == hard);
        }
    }
}

TEST_CASE("generation is deterministic for a fixed seed") {
    auto [full, vocab] = cqda::test::random_kg(20, 3, 100, 17);
    TripleStore observed;
    std::size_t i = 0;
    for (const auto& t : full.triples()) {
        if (i++ % 4 != 0) observed.insert(t.s, t.p, t.o);
    }
    observed.finalize();
    Rng rng1(1234), rng2(1234);
    auto a = generate_instances(full, observed, vocab, Structure::s2i, 8, rng1);
    auto b = generate_instances(full, observed, vocab, Structure::s2i, 8, rng2);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(print_query(a[k].query) == print_query(b[k].query));
        CHECK(a[k].easy == b[k].easy);
        CHECK(a[k].hard == b[k].hard);
    }
}

TEST_CASE("instance JSONL round-trip") {
    auto [full, vocab] = cqda::test::random_kg(20, 3, 100, 18);
    TripleStore observed;
    std::size_t i = 0;
    for (const auto& t : full.triples()) {
        if (i++ % 4 != 0) observed.insert(t.s, t.p, t.o);
    }
    observed.finalize();
    Rng rng(55);
    auto batch = generate_instances(full, observed, vocab, Structure::spin, 5, rng);
    TempDir dir("jsonl");
    save_instances_jsonl(dir.file("q.jsonl"), batch, vocab);
    auto loaded = load_instances_jsonl(dir.file("q.jsonl"), vocab);
    REQUIRE(loaded.size() == batch.size());
    for (std::size_t k = 0; k < batch.size(); ++k) {
        CHECK(loaded[k].id == batch[k].id);
        CHECK(loaded[k].query == batch[k].query);
        CHECK(loaded[k].structure == batch[k].structure);
        CHECK(loaded[k].easy == batch[k].easy);
        CHECK(loaded[k].hard == batch[k].hard);
    }
}
