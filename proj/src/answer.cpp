#include "medlit/answer.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

#include "medlit/error.hpp"
#include "medlit/text.hpp"

namespace medlit {
namespace {

bool is_alnum(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

std::string strip_brackets(std::string_view m) {
    while (!m.empty() && (m.front() == '[' || m.front() == '<')) m.remove_prefix(1);
    while (!m.empty() && (m.back() == ']' || m.back() == '>')) m.remove_suffix(1);
    return std::string(m);
}

struct Sentence {
    std::size_t begin;
    std::size_t end;
};

bool function_word(std::string_view t) {
    static const std::set<std::string, std::less<>> words{
        "a",    "an",   "and",  "are",  "as",    "at",   "be",   "by",   "can",   "did",  "do",
        "does", "for",  "from", "has",  "have",  "how",  "in",   "is",   "it",    "of",   "on",
        "or",   "that", "the",  "there", "this", "to",   "was",  "were", "what",  "when", "where",
        "which", "who", "why",  "will", "with"};
    return words.contains(t);
}

std::vector<Sentence> split_sentences(std::string_view text) {
    std::vector<Sentence> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        const bool terminal = (c == '.' || c == '!' || c == '?') &&
                              (i + 1 == text.size() || text[i + 1] == ' ' || text[i + 1] == '\n' ||
                               text[i + 1] == '\t' || text[i + 1] == '\r');
        if (terminal || c == '\n') {
            out.push_back({start, i + 1});
            start = i + 1;
        }
    }
    if (start < text.size()) out.push_back({start, text.size()});
    return out;
}

}  // namespace

std::vector<ExtractedSpan> OverlapExtractor::extract(std::string_view question, std::string_view passage) const {
    const auto q = tokenize(question);
    std::set<std::string> qset;
    for (const auto& t : q) {
        if (!function_word(t)) qset.insert(t);
    }
    if (qset.empty() || max_tokens_ == 0) return {};

    std::size_t best_overlap = 0;
    std::string_view best_sentence;
    std::vector<TokenSpan> best_tokens;
    for (const auto& s : split_sentences(passage)) {
        const auto sentence = passage.substr(s.begin, s.end - s.begin);
        auto toks = tokenize_with_offsets(sentence);
        std::set<std::string> seen;
        for (const auto& t : toks) {
            if (qset.contains(t.token)) seen.insert(t.token);
        }
        if (seen.size() > best_overlap) {
            best_overlap = seen.size();
            best_sentence = sentence;
            best_tokens = std::move(toks);
        }
    }
    if (best_overlap == 0) return {};
    const std::size_t last = std::min(best_tokens.size(), max_tokens_) - 1;
    const auto text = best_sentence.substr(best_tokens.front().begin, best_tokens[last].end - best_tokens.front().begin);
    const double score = static_cast<double>(best_overlap);
    return {ExtractedSpan{std::string(text), score, score}};
}

SpanCandidate make_candidate(const std::string& doc_id, const std::string& chunk_id, const ExtractedSpan& span) {
    return SpanCandidate{doc_id, chunk_id, span.text, count_tokens(span.text), span.start_loglik, span.end_loglik};
}

std::string_view verdict_name(SpanVerdict v) noexcept {
    switch (v) {
        case SpanVerdict::accepted: return "accepted";
        case SpanVerdict::too_long: return "too_long";
        case SpanVerdict::reserved_marker: return "reserved_marker";
    }
    return "accepted";
}

bool contains_reserved_marker(std::string_view text, const std::vector<std::string>& markers) {
    std::set<std::string, std::less<>> bare;
    for (const auto& m : markers) {
        auto s = strip_brackets(m);
        if (!s.empty()) bare.insert(std::move(s));
    }
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_alnum(text[i])) ++i;
        const std::size_t b = i;
        while (i < text.size() && is_alnum(text[i])) ++i;
        if (i > b && bare.contains(text.substr(b, i - b))) return true;
    }
    return false;
}

SpanVerdict filter_span(const SpanCandidate& span, const SpanRules& rules) {
    if (span.token_length > rules.max_tokens) return SpanVerdict::too_long;
    if (contains_reserved_marker(span.text, rules.reserved_markers)) return SpanVerdict::reserved_marker;
    return SpanVerdict::accepted;
}

std::map<std::string, SpanCandidate> best_span_per_doc(const std::vector<SpanCandidate>& spans) {
    std::map<std::string, SpanCandidate> best;
    for (const auto& s : spans) {
        auto [it, inserted] = best.try_emplace(s.doc_id, s);
        if (inserted) continue;
        const auto& cur = it->second;
        const bool better = s.start_loglik > cur.start_loglik ||
                            (s.start_loglik == cur.start_loglik &&
                             (s.chunk_id < cur.chunk_id || (s.chunk_id == cur.chunk_id && s.text < cur.text)));
        if (better) it->second = s;
    }
    return best;
}

std::vector<AnswerSpan> rank_answers(const std::map<std::string, SpanCandidate>& best,
                                     const std::vector<FusedCandidate>& candidates, double alpha, std::size_t cap) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidParameter("alpha must lie in [0, 1]");
    std::unordered_map<std::string_view, double> retrieval;
    for (const auto& c : candidates) retrieval.emplace(c.doc_id, c.aggregated);

    std::vector<AnswerSpan> answers;
    std::vector<double> starts, aggs;
    for (const auto& [doc_id, span] : best) {
        auto it = retrieval.find(doc_id);
        if (it == retrieval.end()) throw ConsistencyError("answer span for unretrieved document " + doc_id);
        answers.push_back(AnswerSpan{doc_id, {}, span.text, span.start_loglik, it->second, 0.0});
        starts.push_back(span.start_loglik);
        aggs.push_back(it->second);
    }
    const auto sn = minmax_normalize(starts);
    const auto an = minmax_normalize(aggs);
    for (std::size_t i = 0; i < answers.size(); ++i) answers[i].final_score = alpha * sn[i] + (1.0 - alpha) * an[i];

    std::sort(answers.begin(), answers.end(), [](const AnswerSpan& a, const AnswerSpan& b) {
        if (a.final_score != b.final_score) return a.final_score > b.final_score;
        return a.doc_id < b.doc_id;
    });
    if (answers.size() > cap) answers.resize(cap);
    return answers;
}

std::string_view kind_name(ResponseKind k) noexcept {
    switch (k) {
        case ResponseKind::answers: return "answers";
        case ResponseKind::document_list: return "document_list";
        case ResponseKind::clarification: return "clarification";
        case ResponseKind::smalltalk: return "smalltalk";
    }
    return "clarification";
}

SystemResponse clarification_response() {
    SystemResponse r;
    r.kind = ResponseKind::clarification;
    r.items.push_back(ResponseItem{std::string(kClarificationPrompt), std::nullopt, {}, 0.0});
    return r;
}

SystemResponse answer_pipeline(std::string_view question, const std::vector<FusedCandidate>& retrieved,
                               const Corpus& corpus, const SpanExtractor& extractor, const AnswerOptions& opts) {
    if (retrieved.empty()) {
        auto r = clarification_response();
        r.diagnostics["answer"] = {{"retrieved", 0}};
        return r;
    }

    const std::size_t n_docs = std::min({retrieved.size(), opts.max_docs, defaults::kTopK});
    std::vector<SpanCandidate> accepted;
    std::size_t chunks_seen = 0, spans_seen = 0, too_long = 0, marker = 0;
    auto failures = nlohmann::json::array();

    for (std::size_t d = 0; d < n_docs; ++d) {
        const auto& doc_id = retrieved[d].doc_id;
        for (const auto& chunk : corpus.chunks_of(doc_id)) {
            ++chunks_seen;
            std::vector<ExtractedSpan> spans;
            try {
                spans = extractor.extract(question, chunk.text);
            } catch (const std::exception& e) {
                failures.push_back({{"chunk_id", chunk.chunk_id}, {"error", e.what()}});
                continue;
            }
            for (const auto& s : spans) {
                ++spans_seen;
                auto cand = make_candidate(doc_id, chunk.chunk_id, s);
                switch (filter_span(cand, opts.rules)) {
                    case SpanVerdict::accepted: accepted.push_back(std::move(cand)); break;
                    case SpanVerdict::too_long: ++too_long; break;
                    case SpanVerdict::reserved_marker: ++marker; break;
                }
            }
        }
    }

    const auto best = best_span_per_doc(accepted);
    const std::vector<FusedCandidate> considered(retrieved.begin(), retrieved.begin() + static_cast<long>(n_docs));
    auto ranked = rank_answers(best, considered, opts.alpha, opts.max_answers);

    SystemResponse r;
    if (!ranked.empty()) {
        r.kind = ResponseKind::answers;
        for (auto& a : ranked) {
            const Document* doc = corpus.find(a.doc_id);
            a.paper_title = doc ? doc->title : std::string{};
            r.items.push_back(ResponseItem{a.text, a.paper_title, a.doc_id, a.final_score});
        }
    } else {
        r.kind = ResponseKind::document_list;
        const std::size_t n = std::min(retrieved.size(), opts.max_document_list);
        for (std::size_t i = 0; i < n; ++i) {
            const Document* doc = corpus.find(retrieved[i].doc_id);
            const std::string title = doc && !doc->title.empty() ? doc->title : retrieved[i].doc_id;
            r.items.push_back(ResponseItem{title, title, retrieved[i].doc_id, retrieved[i].aggregated});
        }
    }
    r.diagnostics["answer"] = {{"retrieved", retrieved.size()},
                               {"documents_read", n_docs},
                               {"chunks_read", chunks_seen},
                               {"spans_proposed", spans_seen},
                               {"rejected_length", too_long},
                               {"rejected_marker", marker},
                               {"accepted", accepted.size()},
                               {"documents_with_answer", best.size()},
                               {"chunk_failures", failures}};
    return r;
}

nlohmann::json to_json(const SystemResponse& r, bool include_diagnostics) {
    auto items = nlohmann::json::array();
    for (const auto& it : r.items) {
        nlohmann::json j{{"text", it.text}};
        if (it.paper_title) j["paper_title"] = *it.paper_title;
        if (!it.doc_id.empty()) {
            j["doc_id"] = it.doc_id;
            j["score"] = it.score;
        }
        items.push_back(std::move(j));
    }
    nlohmann::json out{{"kind", std::string(kind_name(r.kind))}, {"items", std::move(items)}};
    if (include_diagnostics) out["diagnostics"] = r.diagnostics;
    return out;
}

nlohmann::json to_json(const FusedCandidate& c) {
    return {{"doc_id", c.doc_id},           {"bm25_raw", c.bm25_raw},       {"cosine_raw", c.cosine_raw},
            {"bm25_norm", c.bm25_norm},     {"cosine_norm", c.cosine_norm}, {"aggregated", c.aggregated},
            {"passed_bm25", c.passed_bm25}, {"passed_cosine", c.passed_cosine}};
}

}  // namespace medlit
