#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "run.hpp"

using nlohmann::json;
using fixture::quote;
namespace fs = std::filesystem;

namespace {

const std::string kCli = MEDLIT_CLI_PATH;
const std::string kData = MEDLIT_TEST_DATA;

fs::path fresh_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / ("medlit_cli_" + name + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

fixture::RunResult cli(const std::string& args) { return fixture::run(quote(kCli) + " " + args); }

fs::path build_fixture(const std::string& name) {
    const auto dir = fresh_dir(name);
    REQUIRE(cli("ingest " + quote(kData + "/covid20.jsonl") + " " + quote(dir.string())).exit_code == 0);
    REQUIRE(cli("index " + quote(dir.string())).exit_code == 0);
    REQUIRE(cli("embed " + quote(dir.string())).exit_code == 0);
    return dir;
}

}  // namespace

TEST_CASE("ingest reports drops") {
    const auto dir = fresh_dir("ingest");
    const auto r = cli("ingest " + quote(kData + "/ingest_fixture.jsonl") + " " + quote(dir.string()));
    CHECK(r.exit_code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["kept"] == 4);
    CHECK(j["input"] == 7);
    CHECK(fs::exists(dir / "documents.jsonl"));
    CHECK(fs::exists(dir / "chunks.jsonl"));
    fs::remove_all(dir);
}

TEST_CASE("ingest of an empty file succeeds with nothing kept") {
    const auto dir = fresh_dir("empty");
    fs::create_directories(dir);
    std::ofstream(dir / "empty.jsonl").close();
    const auto r = cli("ingest " + quote((dir / "empty.jsonl").string()) + " " + quote((dir / "out").string()));
    CHECK(r.exit_code == 0);
    CHECK(json::parse(r.out)["kept"] == 0);
    const auto out = quote((dir / "out").string());
    CHECK(cli("index " + out).exit_code == 0);
    CHECK(cli("embed " + out).exit_code == 0);
    CHECK(cli("--artifacts " + out + " ask 'covid incubation' --json").exit_code == 0);
    fs::remove_all(dir);
}

TEST_CASE("usage and input errors exit non-zero") {
    CHECK(cli("ingest /nonexistent/corpus.jsonl /tmp/x").exit_code != 0);
    CHECK(cli("").exit_code != 0);
    CHECK(cli("bogus").exit_code != 0);
    CHECK(cli("--artifacts /nonexistent ask 'what is covid'").exit_code != 0);
    CHECK(cli("--top-k 0 ask x").exit_code != 0);
    CHECK(cli("--config /nonexistent.json serve").exit_code != 0);
}

TEST_CASE("search, ask and chat over the fixture") {
    const auto dir = build_fixture("flow");
    const std::string art = "--artifacts " + quote(dir.string()) + " ";

    auto r = cli(art + "--bm25-threshold 0 search 'covid vaccine' --json");
    REQUIRE(r.exit_code == 0);
    auto j = json::parse(r.out);
    REQUIRE(j.size() >= 1);
    CHECK(j[0]["doc_id"] == "cord-009");

    r = cli(art + "ask 'what is the incubation period of covid-19?' --json");
    REQUIRE(r.exit_code == 0);
    j = json::parse(r.out);
    CHECK(j["kind"] == "answers");
    CHECK(cli(art + "ask 'what is the incubation period of covid-19?' --json").out == r.out);

    r = fixture::run("printf 'hello\\nwhat is the incubation period of covid-19?\\n' | " + quote(kCli) + " " + art +
                     "chat --json");
    REQUIRE(r.exit_code == 0);
    const auto nl = r.out.find('\n');
    CHECK(json::parse(r.out.substr(0, nl))["kind"] == "smalltalk");
    CHECK(json::parse(r.out.substr(nl + 1))["kind"] == "answers");
    fs::remove_all(dir);
}

TEST_CASE("eval and grid-search") {
    const auto dir = build_fixture("eval");
    const std::string common = "--artifacts " + quote(dir.string()) + " ";
    const std::string inputs = " --qrels " + quote(kData + "/qrels.txt") + " --topics " + quote(kData + "/topics.jsonl");

    auto r = cli(common + "eval" + inputs + " --json");
    REQUIRE(r.exit_code == 0);
    auto j = json::parse(r.out);
    CHECK(j["rows"].size() == 3);

    r = cli(common + "eval" + inputs);
    CHECK(r.out.find("Okapi BM25") != std::string::npos);

    r = cli(common + "grid-search" + inputs + " --for sparse_only --json");
    REQUIRE(r.exit_code == 0);
    j = json::parse(r.out);
    CHECK(j["points"] == 1001);
    CHECK(j["best_thresholds"].size() == 1);

    CHECK(cli(common + "grid-search --qrels /nonexistent --topics /nonexistent").exit_code != 0);
    fs::remove_all(dir);
}
