#include <doctest.h>

#include <fstream>

#include "cqda/errors.hpp"
#include "cqda/exact.hpp"
#include "test_helpers.hpp"

using namespace cqda;
using cqda::test::TempDir;

namespace {

std::set<EntityId> answers(const TripleStore& store, const Vocab& vocab,
                           const std::string& text) {
    return answer_exact(store, vocab, to_dnf(parse_query(text)));
}

std::set<EntityId> ids(const Vocab& vocab, std::initializer_list<const char*> labels) {
    std::set<EntityId> out;
    for (const char* l : labels) out.insert(vocab.entity_id(l));
    return out;
}

}  // namespace

TEST_CASE("K4 fixture loads with dense first-appearance vocab") {
    auto [store, vocab] = cqda::test::load_k4();
    CHECK(vocab.n_entities() == 4);
    CHECK(vocab.n_relations() == 2);
    CHECK(store.size() == 4);
    CHECK(vocab.entity_id("a") == 0);  // first appearance order
    CHECK(vocab.entity_id("b") == 1);
}

TEST_CASE("duplicate lines are dropped and counted") {
    TempDir dir("dup");
    {
        std::ofstream out(dir.file("t.tsv"));
        out << "a\tr\tb\na\tr\tb\n";
    }
    LoadReport report;
    auto [store, vocab] = load_triples(dir.file("t.tsv"), std::nullopt, false, &report);
    CHECK(store.size() == 1);
    CHECK(report.duplicates == 1);
    CHECK(report.lines == 2);
}

TEST_CASE("malformed line reports its line number") {
    TempDir dir("arity");
    {
        std::ofstream out(dir.file("t.tsv"));
        out << "a\tr\n";
    }
    CHECK_THROWS_WITH_AS(load_triples(dir.file("t.tsv")),
                         doctest::Contains("line 1"), ParseError);
}

TEST_CASE("frozen vocab rejects unknown labels") {
    auto [store, vocab] = cqda::test::load_k4();
    TempDir dir("frozen");
    {
        std::ofstream out(dir.file("t.tsv"));
        out << "a\tr\tzebra\n";
    }
    CHECK_THROWS_AS(load_triples(dir.file("t.tsv"), vocab, /*allow_extend=*/false), VocabError);
    // extension permitted by flag
    auto [store2, vocab2] = load_triples(dir.file("t.tsv"), vocab, /*allow_extend=*/true);
    CHECK(vocab2.n_entities() == 5);
}

TEST_CASE("neighbors on the K4 fixture") {
    auto [store, vocab] = cqda::test::load_k4();
    EntityId a = vocab.entity_id("a"), b = vocab.entity_id("b"), d = vocab.entity_id("d");
    RelationId r = vocab.relation_id("r"), s = vocab.relation_id("s");

    auto fwd = store.neighbors(a, r, Direction::forward);
    CHECK(std::set<EntityId>(fwd.begin(), fwd.end()) == ids(vocab, {"b", "c", "d"}));
    CHECK(store.neighbors(d, r, Direction::forward).empty());
    auto inv = store.neighbors(d, s, Direction::inverse);
    CHECK(std::set<EntityId>(inv.begin(), inv.end()) == std::set<EntityId>{b});

    CHECK_THROWS_AS(store.neighbors(99, r, Direction::forward), DomainError);
}

TEST_CASE("answer_exact on the K4 fixture") {
    auto [store, vocab] = cqda::test::load_k4();
    CHECK(answers(store, vocab, "?T : r(a,V) & s(V,T)") == ids(vocab, {"d"}));
    CHECK(answers(store, vocab, "?T : r(a,T) & !s(b,T)") == ids(vocab, {"b", "c"}));
}

TEST_CASE("a disjunct whose target is constrained only by negations is invalid") {
    auto [store, vocab] = cqda::test::load_k4();
    // The DNF invariant requires every negated literal's variables to occur
    // in a positive literal of the same disjunct, so the second disjunct of
    // the tautology is rejected rather than evaluated as a complement.
    CHECK_THROWS_AS(answers(store, vocab, "?T : r(a,T) | !r(a,T)"), ContractError);
}

TEST_CASE("single positive atom equals neighbors()") {
    auto [store, vocab] = cqda::test::random_kg(12, 3, 40, 5);
    for (EntityId e = 0; e < 12; ++e) {
        for (RelationId p = 0; p < 3; ++p) {
            std::string q = "?T : r" + std::to_string(p) + "(e" + std::to_string(e) + ",T)";
            DnfQuery dnf = to_dnf(parse_query(q));
            const auto& nbrs = store.neighbors(e, p, Direction::forward);
            if (nbrs.empty()) continue;  // no positive support: nothing to compare
            auto got = answer_exact(store, vocab, dnf);
            CHECK(got == std::set<EntityId>(nbrs.begin(), nbrs.end()));
        }
    }
}

TEST_CASE("answer_exact distributes over disjuncts") {
    auto [store, vocab] = cqda::test::random_kg(10, 2, 30, 6);
    std::string d1 = "?T : r0(e0,T)";
    std::string d2 = "?T : r1(e1,T)";
    std::string both = "?T : r0(e0,T) | r1(e1,T)";
    auto a1 = answers(store, vocab, d1);
    auto a2 = answers(store, vocab, d2);
    std::set<EntityId> expected = a1;
    expected.insert(a2.begin(), a2.end());
    CHECK(answers(store, vocab, both) == expected);
}

TEST_CASE("TSV round-trip preserves triples and indices under a frozen vocab") {
    auto [store, vocab] = cqda::test::random_kg(15, 3, 60, 7);
    TempDir dir("roundtrip");
    save_triples(store, vocab, dir.file("t.tsv"));
    auto [store2, vocab2] = load_triples(dir.file("t.tsv"), vocab, false);
    REQUIRE(store2.size() == store.size());
    for (const auto& t : store.triples()) CHECK(store2.contains(t.s, t.p, t.o));
    for (EntityId e = 0; e < 15; ++e) {
        for (RelationId p = 0; p < 3; ++p) {
            CHECK(store.neighbors(e, p, Direction::forward) ==
                  store2.neighbors(e, p, Direction::forward));
            CHECK(store.neighbors(e, p, Direction::inverse) ==
                  store2.neighbors(e, p, Direction::inverse));
        }
    }
}

TEST_CASE("by_sp / by_op are exact inverses") {
    auto [store, vocab] = cqda::test::random_kg(20, 4, 100, 8);
    for (const auto& t : store.triples()) {
        const auto& objs = store.neighbors(t.s, t.p, Direction::forward);
        const auto& subs = store.neighbors(t.o, t.p, Direction::inverse);
        CHECK(std::binary_search(objs.begin(), objs.end(), t.o));
        CHECK(std::binary_search(subs.begin(), subs.end(), t.s));
    }
    for (EntityId e = 0; e < 20; ++e) {
        for (RelationId p = 0; p < 4; ++p) {
            for (EntityId o : store.neighbors(e, p, Direction::forward)) {
                const auto& subs = store.neighbors(o, p, Direction::inverse);
                CHECK(std::binary_search(subs.begin(), subs.end(), e));
            }
        }
    }
}
