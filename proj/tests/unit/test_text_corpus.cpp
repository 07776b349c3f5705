#include <sstream>

#include "doctest.h"
#include "generators.hpp"
#include "medlit/corpus.hpp"
#include "medlit/error.hpp"
#include "medlit/text.hpp"

using namespace medlit;

namespace {

RawRecord record(std::string id, std::string abstract_text, std::vector<std::string> body, std::string source = "s") {
    return RawRecord{std::move(id), std::move(source), "title", std::move(abstract_text), std::move(body)};
}

std::string jsonl(const std::vector<RawRecord>& recs) {
    std::ostringstream out;
    for (const auto& r : recs) write_record(out, r);
    return out.str();
}

}  // namespace

TEST_CASE("tokenizer lowercases and splits on punctuation") {
    CHECK(tokenize("COVID-19 spreads, fast!") == std::vector<std::string>{"covid", "19", "spreads", "fast"});
    CHECK(tokenize("") .empty());
    CHECK(tokenize("  ...  ").empty());
    CHECK(count_tokens("a b  c") == 3);
}

TEST_CASE("tokenizer keeps non-ascii bytes inside tokens") {
    const auto t = tokenize("Café naïve");
    REQUIRE(t.size() == 2);
    CHECK(t[0] == "caf\xc3\xa9");
    CHECK(t[1] == "na\xc3\xafve");
}

TEST_CASE("token offsets point into the source") {
    const std::string s = "The  Virus, spreads";
    for (const auto& t : tokenize_with_offsets(s)) {
        CHECK(to_lower_ascii(s.substr(t.begin, t.end - t.begin)) == t.token);
    }
}

TEST_CASE("fnv1a64 matches published vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("parse_corpus skips bad lines and keeps going") {
    std::istringstream in(
        "{\"doc_id\":\"a\",\"abstract\":\"x\",\"body\":[\"y\"]}\n"
        "\n"
        "not json\n"
        "{\"doc_id\":\"\",\"abstract\":\"x\"}\n"
        "{\"doc_id\":\"b\",\"body\":\"oops\"}\n"
        "{\"doc_id\":\"c\"}\n");
    const auto r = parse_corpus(in);
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].doc_id == "a");
    CHECK(r.records[1].doc_id == "c");
    REQUIRE(r.skipped.size() == 3);
    CHECK(r.skipped[0].line_number == 3);
    CHECK(r.skipped[1].line_number == 4);
    CHECK(r.skipped[2].line_number == 5);
}

TEST_CASE("deduplicate keeps the larger record, earliest on ties, first-appearance order") {
    const std::vector<RawRecord> in{
        record("x", "one two", {"three"}, "pubmed"),
        record("y", "alpha", {"beta"}),
        record("x", "one two three", {"four five"}, "pmc"),
        record("y", "gamma", {"delta"}),
    };
    const auto out = deduplicate(in);
    REQUIRE(out.size() == 2);
    CHECK(out[0].doc_id == "x");
    CHECK(out[0].source == "pmc");
    CHECK(out[1].doc_id == "y");
    CHECK(out[1].abstract_text == "alpha");
}

TEST_CASE("filters apply presence checks before size limits") {
    const std::vector<RawRecord> in{
        record("noabs", "", {"body"}),
        record("nobody", "abstract", {}),
        record("blankbody", "abstract", {"  ", "..."}),
        record("long", gen::words(301), {"b"}),
        record("many", "abstract", std::vector<std::string>(101, "p")),
        record("edge", gen::words(300), std::vector<std::string>(100, "p")),
    };
    const auto r = filter_documents(in);
    CHECK(r.report.dropped_no_abstract == 1);
    CHECK(r.report.dropped_no_body == 2);
    CHECK(r.report.dropped_abstract_len == 1);
    CHECK(r.report.dropped_body_len == 1);
    CHECK(r.report.kept == 1);
    REQUIRE(r.documents.size() == 1);
    CHECK(r.documents[0].doc_id == "edge");
    CHECK(r.documents[0].abstract_tokens.size() == 300);
}

TEST_CASE("chunk spans for small bodies") {
    using Spans = std::vector<std::pair<std::size_t, std::size_t>>;
    CHECK(chunk_spans(500, 220, 50) == Spans{{0, 220}, {170, 390}, {340, 500}});
    CHECK(chunk_spans(220, 220, 50) == Spans{{0, 220}});
    CHECK(chunk_spans(221, 220, 50) == Spans{{0, 220}, {170, 221}});
    CHECK(chunk_spans(390, 220, 50) == Spans{{0, 220}, {170, 390}});
    CHECK(chunk_spans(5, 220, 50) == Spans{{0, 5}});
    CHECK(chunk_spans(0, 220, 50).empty());
    CHECK_THROWS_AS(chunk_spans(10, 50, 50), InvalidParameter);
    CHECK_THROWS_AS(chunk_spans(10, 0, 0), InvalidParameter);
}

TEST_CASE("chunk spans cover the body with fixed overlap") {
    for (std::size_t n = 1; n <= 1500; ++n) {
        const auto spans = chunk_spans(n, 220, 50);
        REQUIRE(!spans.empty());
        CHECK(spans.front().first == 0);
        CHECK(spans.back().second == n);
        for (std::size_t i = 0; i < spans.size(); ++i) {
            CHECK(spans[i].second - spans[i].first <= 220);
            if (i + 1 < spans.size()) {
                CHECK(spans[i].second - spans[i + 1].first == 50);
                CHECK(spans[i].second - spans[i].first == 220);
            }
        }
    }
}

TEST_CASE("chunk text is the original body substring") {
    Document d;
    d.doc_id = "doc";
    d.body_paragraphs = {"First, paragraph here.", "Second (paragraph) ends."};
    const auto chunks = chunk_body(d, 4, 1);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].chunk_id == "doc#00000");
    CHECK(chunks[0].text == "First, paragraph here.\n\nSecond");
    CHECK(chunks[1].chunk_id == "doc#00001");
    CHECK(chunks[1].text == "Second (paragraph) ends");
    CHECK(chunks[1].token_start == 3);
    CHECK(chunks[1].token_end == 6);
}

TEST_CASE("ingest runs the full pipeline") {
    const std::string data = jsonl({
        record("a", "coronavirus spike", {gen::words(300)}),
        record("a", "coronavirus", {"short"}),
        record("b", "", {"x"}),
    });
    std::istringstream in(data);
    const auto r = ingest(in);
    CHECK(r.report.input == 3);
    CHECK(r.report.deduped == 2);
    CHECK(r.report.dropped_no_abstract == 1);
    CHECK(r.report.kept == 1);
    CHECK(r.corpus.size() == 1);
    CHECK(r.corpus.chunks_of("a").size() == 2);
    CHECK(r.corpus.find("b") == nullptr);
}

TEST_CASE("empty corpus ingests to nothing") {
    std::istringstream in("");
    const auto r = ingest(in);
    CHECK(r.report == DropReport{});
    CHECK(r.corpus.size() == 0);
}

TEST_CASE("corpus rejects duplicate ids and orphan chunks") {
    Document d;
    d.doc_id = "a";
    CHECK_THROWS_AS(Corpus({d, d}, {}), InvalidInput);
    CHECK_THROWS_AS(Corpus({d}, {Chunk{"z#00000", "z", 0, 1, "t"}}), ConsistencyError);
}
