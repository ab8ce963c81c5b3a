#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "cqda/exact.hpp"
#include "cqda/rng.hpp"
#include "cqda/triple_store.hpp"

#ifndef CQDA_TEST_DATA_DIR
#define CQDA_TEST_DATA_DIR "."
#endif

namespace cqda::test {

inline std::string data_path(const std::string& name) {
    return std::string(CQDA_TEST_DATA_DIR) + "/" + name;
}

// K4 fixture: {(a,r,b),(a,r,c),(a,r,d),(b,s,d)}.
inline std::pair<TripleStore, Vocab> load_k4() {
    return load_triples(data_path("k4.tsv"));
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("cqda-test-" + tag + "-" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// Random multigraph over n entities / m relations with `edges` distinct
// triples; labels e0.., r0...
inline std::pair<TripleStore, Vocab> random_kg(std::size_t n, std::size_t m, std::size_t edges,
                                               std::uint64_t seed) {
    Vocab vocab;
    for (std::size_t i = 0; i < n; ++i) vocab.add_entity("e" + std::to_string(i));
    for (std::size_t i = 0; i < m; ++i) vocab.add_relation("r" + std::to_string(i));
    TripleStore store;
    Rng rng(seed);
    std::size_t added = 0, guard = 0;
    while (added < edges && guard < edges * 50) {
        ++guard;
        auto s = static_cast<EntityId>(rng.uniform_int(static_cast<std::int64_t>(n)));
        auto p = static_cast<RelationId>(rng.uniform_int(static_cast<std::int64_t>(m)));
        auto o = static_cast<EntityId>(rng.uniform_int(static_cast<std::int64_t>(n)));
        if (s == o) continue;
        std::size_t before = store.size();
        store.insert(s, p, o);
        if (store.size() > before) ++added;
    }
    // Pad the entity/relation tables so ids cover the vocab even if sampling
    // missed some index (keeps embedding shapes aligned with the vocab).
    store.insert(static_cast<EntityId>(n - 1), static_cast<RelationId>(m - 1),
                 static_cast<EntityId>(n - 2));
    store.finalize();
    return {std::move(store), std::move(vocab)};
}

}  // namespace cqda::test
