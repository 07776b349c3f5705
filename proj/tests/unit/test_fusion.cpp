#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "generators.hpp"
#include "medlit/error.hpp"
#include "medlit/fusion.hpp"
#include "medlit/text.hpp"

using namespace medlit;

namespace {

std::vector<ScoredDoc> sorted(std::vector<ScoredDoc> v) {
    sort_by_score(v);
    return v;
}

FusionConfig config(double tb, double tc, Strategy s = Strategy::union_, std::size_t k = 20) {
    FusionConfig c;
    c.bm25_threshold = tb;
    c.cosine_threshold = tc;
    c.strategy = s;
    c.top_k = k;
    return c;
}

std::set<std::string> ids(const std::vector<FusedCandidate>& c) {
    std::set<std::string> out;
    for (const auto& x : c) out.insert(x.doc_id);
    return out;
}

std::vector<std::string> order(const std::vector<FusedCandidate>& c) {
    std::vector<std::string> out;
    for (const auto& x : c) out.push_back(x.doc_id);
    return out;
}

}  // namespace

TEST_CASE("threshold is inclusive") {
    const std::vector<ScoredDoc> s{{"a", 3.0}, {"b", 2.77}, {"c", 2.76}};
    const auto kept = threshold_filter(s, 2.77);
    REQUIRE(kept.size() == 2);
    CHECK(kept[1].doc_id == "b");
}

TEST_CASE("minmax normalization") {
    const auto n = minmax_normalize({2, 4, 6});
    CHECK(n == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(minmax_normalize({3, 3}) == std::vector<double>{1.0, 1.0});
    CHECK(minmax_normalize({}).empty());
}

TEST_CASE("union fuses hand-computed example") {
    const auto bm25 = sorted({{"a", 6.0}, {"b", 4.0}, {"c", 1.0}});
    const auto dense = sorted({{"a", 0.5}, {"b", 0.95}, {"d", 0.9}, {"c", 0.2}});
    std::size_t pool = 0;
    const auto f = fuse(bm25, dense, config(3.0, 0.89), &pool);
    CHECK(pool == 3);
    REQUIRE(f.size() == 3);
    // pool {a, b, d}; bm25 raw {6, 4, 0} -> {1, 2/3, 0}; cosine raw {0.5, 0.95, 0.9} -> {0, 1, 0.888..}
    CHECK(f[0].doc_id == "b");
    CHECK(f[0].aggregated == doctest::Approx(2.0 / 3.0 + 1.0));
    CHECK(f[1].doc_id == "a");
    CHECK(f[1].aggregated == doctest::Approx(1.0));
    CHECK(f[2].doc_id == "d");
    CHECK(f[2].aggregated == doctest::Approx(0.4 / 0.45));
    CHECK(f[2].bm25_raw == 0.0);
    CHECK(f[2].passed_cosine);
    CHECK_FALSE(f[2].passed_bm25);
}

TEST_CASE("solo strategies use one arm") {
    const auto bm25 = sorted({{"a", 6.0}, {"b", 4.0}});
    const auto dense = sorted({{"c", 0.99}, {"a", 0.1}});
    const auto s = fuse(bm25, dense, config(0, 0.5, Strategy::sparse_only));
    CHECK(order(s) == std::vector<std::string>{"a", "b"});
    for (const auto& c : s) CHECK(c.cosine_norm == 0.0);
    const auto d = fuse(bm25, dense, config(0, 0.5, Strategy::dense_only));
    CHECK(order(d) == std::vector<std::string>{"c"});
    CHECK(d[0].bm25_norm == 0.0);
}

TEST_CASE("empty arms") {
    CHECK(fuse({}, {}, config(0, 0)).empty());
    // A lone candidate is a degenerate range on both arms, so both normalize to 1.
    const auto f = fuse(sorted({{"a", 1.0}}), {}, config(0, 0));
    REQUIRE(f.size() == 1);
    CHECK(f[0].aggregated == doctest::Approx(2.0));
    CHECK(f[0].cosine_raw == 0.0);
}

TEST_CASE("fusion properties on random score tables") {
    gen::Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<ScoredDoc> bm25, dense;
        const std::size_t n = rng.range(1, 40);
        for (std::size_t i = 0; i < n; ++i) {
            const std::string id = "d" + std::to_string(i);
            if (rng.chance(0.7)) bm25.push_back({id, rng.real(0, 10)});
            dense.push_back({id, rng.real(-1, 1)});
        }
        sort_by_score(bm25);
        sort_by_score(dense);
        const double tb = rng.real(0, 8);
        const double tc = rng.real(-0.5, 0.9);
        const std::size_t big = 1000;

        const auto u = fuse(bm25, dense, config(tb, tc, Strategy::union_, big));
        const auto s = fuse(bm25, dense, config(tb, tc, Strategy::sparse_only, big));
        const auto d = fuse(bm25, dense, config(tb, tc, Strategy::dense_only, big));
        const auto uid = ids(u);
        for (const auto& x : ids(s)) CHECK(uid.contains(x));
        for (const auto& x : ids(d)) CHECK(uid.contains(x));
        for (const auto& c : u) {
            CHECK(c.bm25_norm >= 0.0);
            CHECK(c.bm25_norm <= 1.0);
            CHECK(c.cosine_norm >= 0.0);
            CHECK(c.cosine_norm <= 1.0);
        }

        const auto cut = fuse(bm25, dense, config(tb, tc, Strategy::union_, 20));
        CHECK(cut.size() == std::min<std::size_t>(20, u.size()));
        for (std::size_t i = 0; i < cut.size(); ++i) CHECK(cut[i] == u[i]);

        auto scaled = bm25;
        const double k = rng.real(0.1, 10);
        for (auto& x : scaled) x.score *= k;
        const auto v = fuse(scaled, dense, config(tb * k, tc, Strategy::union_, big));
        CHECK(order(v) == order(u));
    }
}

TEST_CASE("config validation") {
    FusionConfig c;
    c.top_k = 0;
    CHECK_THROWS_AS(c.validate(), InvalidParameter);
    c = FusionConfig{};
    c.bm25_threshold = std::nan("");
    CHECK_THROWS_AS(c.validate(), InvalidParameter);
    CHECK(parse_strategy("union") == Strategy::union_);
    CHECK(parse_strategy("bm25") == Strategy::sparse_only);
    CHECK(parse_strategy("dense") == Strategy::dense_only);
    CHECK_THROWS_AS(parse_strategy("nope"), InvalidParameter);
}

TEST_CASE("retrieve falls back to sparse when the embedder fails") {
    const auto index = InvertedIndex::build({{"a", tokenize("covid vaccine")}, {"b", tokenize("flu")}});
    DenseStore store(4, "failing");
    store.add("a", {1, 0, 0, 0});
    store.add("b", {0, 1, 0, 0});
    fixture::FailingEmbedder e(4);
    const auto r = retrieve("covid", index, store, e, config(0, 0.5));
    CHECK(r.dense_unavailable);
    CHECK(r.strategy_used == Strategy::sparse_only);
    CHECK(r.warnings.size() == 1);
    CHECK(order(r.candidates) == std::vector<std::string>{"a"});
}

TEST_CASE("retrieve with a working embedder") {
    const auto index = InvertedIndex::build({{"a", tokenize("covid vaccine")}, {"b", tokenize("flu")}});
    DenseStore store(2, "table/2");
    store.add("a", {1, 0});
    store.add("b", {0, 1});
    fixture::TableEmbedder e(2, {{"flu", {0, 1}}});
    const auto r = retrieve("flu", index, store, e, config(100, 0.9));
    CHECK_FALSE(r.dense_unavailable);
    CHECK(order(r.candidates) == std::vector<std::string>{"b"});
    CHECK(r.sparse.scored == 1);
    CHECK(r.sparse.passed == 0);
    CHECK(r.dense.passed == 1);
    CHECK(r.pool_size == 1);
}
