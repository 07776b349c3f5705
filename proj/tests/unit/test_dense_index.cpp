#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "generators.hpp"
#include "medlit/dense_index.hpp"
#include "medlit/error.hpp"
#include "oracles.hpp"

using namespace medlit;
namespace fs = std::filesystem;

namespace {

Document doc(std::string id, std::string abstract_text) {
    Document d;
    d.doc_id = std::move(id);
    d.abstract_text = std::move(abstract_text);
    return d;
}

fs::path temp_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("medlit_dense_" + name + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("cosine basics") {
    CHECK(cosine({1, 0}, {1, 0}) == doctest::Approx(1.0));
    CHECK(cosine({1, 0}, {0, 1}) == doctest::Approx(0.0));
    CHECK(cosine({1, 0}, {-1, 0}) == doctest::Approx(-1.0));
    CHECK(cosine({0, 0}, {1, 0}) == 0.0);
    CHECK_THROWS_AS(cosine({1, 0}, {1, 0, 0}), InvalidInput);
}

TEST_CASE("hashed embedder is deterministic and unit length") {
    HashedEmbedder e(64);
    const auto a = e.embed("coronavirus spike protein");
    CHECK(a == e.embed("coronavirus spike protein"));
    CHECK(a.size() == 64);
    double n = 0;
    for (double x : a) n += x * x;
    CHECK(n == doctest::Approx(1.0));
    CHECK(e.provider_id() == "hashed-bow-fnv1a/64");
    const auto empty = e.embed("");
    for (double x : empty) CHECK(x == 0.0);
}

TEST_CASE("store scores match brute-force cosine") {
    gen::Rng rng(5);
    const std::size_t dim = 37;
    DenseStore store(dim, "test");
    std::vector<EmbeddingVector> rows;
    for (int i = 0; i < 40; ++i) {
        EmbeddingVector v(dim);
        for (auto& x : v) x = static_cast<float>(rng.real(-1, 1));
        rows.push_back(v);
        store.add("d" + std::to_string(i), v);
    }
    EmbeddingVector q(dim);
    for (auto& x : q) x = rng.real(-1, 1);
    const auto scores = store.dense_scores(q);
    REQUIRE(scores.size() == 40);
    for (const auto& s : scores) {
        const std::size_t i = std::stoul(s.doc_id.substr(1));
        CHECK(std::abs(s.score - oracle::cosine(q, rows[i])) <= 1e-9);
    }
    for (std::size_t i = 1; i < scores.size(); ++i) CHECK(scores[i - 1].score >= scores[i].score);
}

TEST_CASE("self similarity ranks first") {
    HashedEmbedder e(128);
    const std::vector<Document> docs{doc("a", "masks reduce droplet spread"), doc("b", "vaccine trial results"),
                                     doc("c", "camels carry mers")};
    const auto store = build_store(docs, e);
    const auto s = store.dense_scores(e.embed("vaccine trial results"));
    CHECK(s[0].doc_id == "b");
    CHECK(s[0].score == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("equal abstracts give equal rows; zero rows score zero") {
    HashedEmbedder e(16);
    const auto store = build_store({doc("a", "same text"), doc("b", "same text"), doc("z", "")}, e);
    for (std::size_t i = 0; i < 16; ++i) CHECK(store.row(0)[i] == store.row(1)[i]);
    for (const auto& s : store.dense_scores(e.embed("same"))) {
        if (s.doc_id == "z") CHECK(s.score == 0.0);
    }
}

TEST_CASE("dimension and id checks") {
    DenseStore store(3, "p");
    store.add("a", {1, 0, 0});
    CHECK_THROWS_AS(store.add("b", {1, 0}), InvalidInput);
    CHECK_THROWS_AS(store.add("a", {1, 0, 0}), InvalidInput);
    CHECK_THROWS_AS(store.dense_scores({1, 0}), InvalidInput);
}

TEST_CASE("provider failure names the document") {
    fixture::FailingEmbedder e(4);
    try {
        build_store({doc("broken-doc", "x")}, e);
        FAIL("expected ProviderError");
    } catch (const ProviderError& err) {
        CHECK(std::string(err.what()).find("broken-doc") != std::string::npos);
    }
}

TEST_CASE("store persistence round-trip and corruption") {
    HashedEmbedder e(32);
    const auto store = build_store({doc("a", "alpha beta"), doc("b", "gamma")}, e);
    const auto dir = temp_dir("rt");
    store.save(dir / "v.manifest.json", dir / "v.f32");
    const auto loaded = DenseStore::load(dir / "v.manifest.json", dir / "v.f32");
    CHECK(loaded == store);
    CHECK(loaded.checksum() == store.checksum());
    CHECK(loaded.dense_scores(e.embed("alpha")) == store.dense_scores(e.embed("alpha")));

    {
        std::fstream f(dir / "v.f32", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(5);
        f.put('\x7f');
    }
    CHECK_THROWS_AS(DenseStore::load(dir / "v.manifest.json", dir / "v.f32"), CorruptArtifact);
    fs::resize_file(dir / "v.f32", 10);
    CHECK_THROWS_AS(DenseStore::load(dir / "v.manifest.json", dir / "v.f32"), CorruptArtifact);
    fs::remove_all(dir);
}
