#include <filesystem>
#include <fstream>
#include <map>

#include "doctest.h"
#include "medlit/config.hpp"
#include "medlit/defaults.hpp"
#include "medlit/error.hpp"
#include "medlit/nlu.hpp"

using namespace medlit;
namespace fs = std::filesystem;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
    return [vars](const std::string& k) -> std::optional<std::string> {
        auto it = vars.find(k);
        if (it == vars.end()) return std::nullopt;
        return it->second;
    };
}

fs::path write_temp(const std::string& name, const std::string& body) {
    const auto p = fs::temp_directory_path() / name;
    std::ofstream(p) << body;
    return p;
}

}  // namespace

TEST_CASE("defaults are the published operating point") {
    const AppConfig c;
    CHECK(c.fusion.bm25_threshold == 2.77);
    CHECK(c.fusion.cosine_threshold == 0.89);
    CHECK(c.fusion.top_k == 20);
    CHECK(c.fusion.strategy == Strategy::union_);
    CHECK(c.max_answers == 5);
    CHECK(c.max_span_tokens == 15);
    CHECK(c.chunk_window == 220);
    CHECK(c.chunk_overlap == 50);
    CHECK(c.max_abstract_tokens == 300);
    CHECK(c.max_body_paragraphs == 100);
    CHECK(c.embedding_dimension == 768);
    CHECK(c.alpha == 0.5);
    CHECK(c.bm25.k1 == 1.5);
    CHECK(c.bm25.b == 0.75);
}

TEST_CASE("env var naming") {
    CHECK(env_var_for("fusion.bm25_threshold") == "MEDLIT_FUSION_BM25_THRESHOLD");
    CHECK(env_var_for("debug") == "MEDLIT_DEBUG");
}

TEST_CASE("file then environment") {
    const auto p = write_temp("medlit_cfg_test.json",
                              R"({"fusion": {"bm25_threshold": 3, "top_k": 7}, "server": {"port": 9000}})");
    const auto c = load_config(p, env_of({{"MEDLIT_FUSION_TOP_K", "9"}, {"MEDLIT_DEBUG", "true"}}));
    CHECK(c.fusion.bm25_threshold == 3.0);
    CHECK(c.fusion.top_k == 9);
    CHECK(c.port == 9000);
    CHECK(c.debug);
    CHECK(c.fusion.cosine_threshold == 0.89);
    fs::remove(p);
}

TEST_CASE("bad configs are rejected") {
    CHECK_THROWS_AS(config_from_json({{"fusion", {{"nope", 1}}}}), InvalidParameter);
    CHECK_THROWS_AS(config_from_json({{"fusion", {{"top_k", "five"}}}}), InvalidParameter);
    CHECK_THROWS_AS(config_from_json({{"fusion", {{"top_k", 2.5}}}}), InvalidParameter);
    CHECK_THROWS_AS(config_from_json({{"fusion", {{"top_k", 0}}}}), InvalidParameter);
    CHECK_THROWS_AS(config_from_json({{"ingest", {{"chunk_overlap", 300}}}}), InvalidParameter);
    CHECK_THROWS_AS(config_from_json({{"answer", {{"alpha", 2.0}}}}), InvalidParameter);
    CHECK_THROWS_AS(load_config(std::nullopt, env_of({{"MEDLIT_FUSION_TOP_K", "x"}})), InvalidParameter);
    CHECK_THROWS_AS(load_config(fs::path("/nonexistent/medlit.json"), env_of({})), NotFound);
    const auto p = write_temp("medlit_cfg_bad.json", "{not json");
    CHECK_THROWS_AS(load_config(p, env_of({})), InvalidParameter);
    fs::remove(p);
}

TEST_CASE("set_config_value") {
    AppConfig c;
    set_config_value(c, "fusion.strategy", "dense_only");
    set_config_value(c, "answer.alpha", "0.25");
    set_config_value(c, "fusion.bm25_threshold", "4");
    CHECK(c.fusion.strategy == Strategy::dense_only);
    CHECK(c.alpha == 0.25);
    CHECK(c.fusion.bm25_threshold == 4.0);
    CHECK_THROWS_AS(set_config_value(c, "fusion.unknown", "1"), InvalidParameter);
}

TEST_CASE("json round-trip") {
    AppConfig c;
    c.fusion.top_k = 3;
    c.providers.embedder = "http://localhost:1";
    const auto again = config_from_json(config_to_json(c));
    CHECK(config_to_json(again) == config_to_json(c));
}

TEST_CASE("shipped config files load") {
    const fs::path dir = fs::path(MEDLIT_TEST_DATA) / ".." / ".." / "config";
    const auto c = load_config(dir / "medlit.json", env_of({}));
    CHECK(config_to_json(c)["fusion"] == config_to_json(AppConfig{})["fusion"]);
    const auto d = DiseaseDictionary::load(dir / "diseases.json");
    CHECK(d.to_json() == DiseaseDictionary::builtin().to_json());
}
