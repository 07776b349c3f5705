#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "generators.hpp"
#include "medlit/answer.hpp"
#include "medlit/error.hpp"
#include "medlit/text.hpp"

using namespace medlit;

namespace {

Corpus small_corpus() {
    std::vector<Document> docs;
    std::vector<Chunk> chunks;
    for (int i = 0; i < 3; ++i) {
        Document d;
        d.doc_id = "d" + std::to_string(i);
        d.title = "Paper " + std::to_string(i);
        d.abstract_text = "abstract";
        d.body_paragraphs = {"passage " + std::to_string(i)};
        chunks.push_back(Chunk{make_chunk_id(d.doc_id, 0), d.doc_id, 0, 2, "passage " + std::to_string(i)});
        docs.push_back(d);
    }
    return Corpus(docs, chunks);
}

std::vector<FusedCandidate> retrieved(std::vector<std::pair<std::string, double>> v) {
    std::vector<FusedCandidate> out;
    for (auto& [id, s] : v) {
        FusedCandidate c;
        c.doc_id = id;
        c.aggregated = s;
        out.push_back(c);
    }
    return out;
}

}  // namespace

TEST_CASE("span filter") {
    SpanCandidate c{"d", "d#00000", gen::words(15), 15, 1, 1};
    CHECK(filter_span(c) == SpanVerdict::accepted);
    c.text = gen::words(16);
    c.token_length = 16;
    CHECK(filter_span(c) == SpanVerdict::too_long);
    c = make_candidate("d", "d#00000", {"the [SEP] answer", 1, 1});
    CHECK(filter_span(c) == SpanVerdict::reserved_marker);
    CHECK(contains_reserved_marker("x CLS y", SpanRules{}.reserved_markers));
    CHECK(contains_reserved_marker("<PAD>", SpanRules{}.reserved_markers));
    CHECK_FALSE(contains_reserved_marker("sep cls pad", SpanRules{}.reserved_markers));
    CHECK_FALSE(contains_reserved_marker("SEPSIS", SpanRules{}.reserved_markers));
}

TEST_CASE("best span per document") {
    const std::vector<SpanCandidate> spans{
        {"a", "a#00001", "late", 1, 2.0, 0},
        {"a", "a#00000", "early", 1, 2.0, 0},
        {"a", "a#00002", "low", 1, 1.0, 0},
        {"b", "b#00000", "only", 1, -5.0, 0},
    };
    const auto best = best_span_per_doc(spans);
    REQUIRE(best.size() == 2);
    CHECK(best.at("a").text == "early");
    CHECK(best.at("b").text == "only");
}

TEST_CASE("rank answers combines normalized scores") {
    std::map<std::string, SpanCandidate> best{
        {"a", {"a", "a#0", "x", 1, 4.0, 0}},
        {"b", {"b", "b#0", "y", 1, 2.0, 0}},
        {"c", {"c", "c#0", "z", 1, 0.0, 0}},
    };
    const auto cands = retrieved({{"a", 0.0}, {"b", 2.0}, {"c", 1.0}});
    const auto r = rank_answers(best, cands, 0.5, 5);
    REQUIRE(r.size() == 3);
    // a: 0.5*1 + 0.5*0 = 0.5; b: 0.5*0.5 + 0.5*1 = 0.75; c: 0 + 0.25
    CHECK(r[0].doc_id == "b");
    CHECK(r[0].final_score == doctest::Approx(0.75));
    CHECK(r[1].doc_id == "a");
    CHECK(r[2].doc_id == "c");
    CHECK(rank_answers(best, cands, 0.5, 2).size() == 2);
    CHECK_THROWS_AS(rank_answers(best, cands, 1.5, 5), InvalidParameter);
    CHECK_THROWS_AS(rank_answers(best, retrieved({{"a", 1}}), 0.5, 5), ConsistencyError);
}

TEST_CASE("overlap extractor picks the best sentence") {
    OverlapExtractor e;
    const auto s = e.extract("what is the incubation period?",
                             "Masks help. The incubation period is five days. Period of rest.");
    REQUIRE(s.size() == 1);
    CHECK(s[0].text == "The incubation period is five days");
    CHECK(s[0].start_loglik == 2.0);
    CHECK(e.extract("zebra", "Masks help.").empty());
    CHECK(e.extract("the of", "The end of it.").empty());

    OverlapExtractor shortcut(3);
    const auto t = shortcut.extract("incubation", "The incubation period is five days.");
    REQUIRE(t.size() == 1);
    CHECK(t[0].text == "The incubation period");
}

TEST_CASE("three response kinds") {
    const auto corpus = small_corpus();
    SUBCASE("clarification when nothing is retrieved") {
        fixture::ScriptedExtractor e([](auto, auto) { return std::vector<ExtractedSpan>{}; });
        const auto r = answer_pipeline("q", {}, corpus, e);
        CHECK(r.kind == ResponseKind::clarification);
        CHECK(r.items.at(0).text == kClarificationPrompt);
    }
    SUBCASE("document list when every span is rejected") {
        fixture::ScriptedExtractor e([](auto, auto) { return std::vector<ExtractedSpan>{{"[CLS] x", 1, 1}}; });
        const auto r = answer_pipeline("q", retrieved({{"d2", 2}, {"d0", 1}}), corpus, e);
        CHECK(r.kind == ResponseKind::document_list);
        REQUIRE(r.items.size() == 2);
        CHECK(r.items[0].text == "Paper 2");
        CHECK(r.diagnostics["answer"]["rejected_marker"] == 2);
    }
    SUBCASE("answers otherwise") {
        fixture::ScriptedExtractor e(
            [](auto, std::string_view p) { return std::vector<ExtractedSpan>{{std::string(p), 1, 1}}; });
        const auto r = answer_pipeline("q", retrieved({{"d2", 2}, {"d0", 1}}), corpus, e);
        CHECK(r.kind == ResponseKind::answers);
        REQUIRE(r.items.size() == 2);
        CHECK(r.items[0].paper_title == std::optional<std::string>("Paper 2"));
    }
    SUBCASE("extractor failures are recorded, not fatal") {
        fixture::ScriptedExtractor e([](auto, std::string_view p) -> std::vector<ExtractedSpan> {
            if (p == "passage 0") throw ProviderError("boom");
            return {{"fine", 1, 1}};
        });
        const auto r = answer_pipeline("q", retrieved({{"d0", 2}, {"d1", 1}}), corpus, e);
        CHECK(r.kind == ResponseKind::answers);
        CHECK(r.items.size() == 1);
        CHECK(r.diagnostics["answer"]["chunk_failures"].size() == 1);
    }
}

TEST_CASE("json shape") {
    const auto r = clarification_response();
    const auto j = to_json(r, false);
    CHECK(j["kind"] == "clarification");
    CHECK_FALSE(j.contains("diagnostics"));
    CHECK(to_json(r, true).contains("diagnostics"));
}
