#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "medlit/corpus.hpp"
#include "medlit/defaults.hpp"
#include "medlit/fusion.hpp"

namespace medlit {

/// A span proposed by an extractor for one passage.
struct ExtractedSpan {
    std::string text;
    double start_loglik = 0.0;
    double end_loglik = 0.0;
};

class SpanExtractor {
public:
    virtual ~SpanExtractor() = default;
    /// Deterministic for identical inputs. Throws ProviderError on failure.
    virtual std::vector<ExtractedSpan> extract(std::string_view question, std::string_view passage) const = 0;
};

/// Picks the passage sentence sharing the most distinct tokens with the
/// question, ignoring common function words (earliest on ties), cut to
/// `max_tokens` tokens. Both logliks are set to the overlap count. No overlap yields no span.
class OverlapExtractor final : public SpanExtractor {
public:
    explicit OverlapExtractor(std::size_t max_tokens = defaults::kMaxSpanTokens) : max_tokens_(max_tokens) {}
    std::vector<ExtractedSpan> extract(std::string_view question, std::string_view passage) const override;

private:
    std::size_t max_tokens_;
};

struct SpanCandidate {
    std::string doc_id;
    std::string chunk_id;
    std::string text;
    std::size_t token_length = 0;
    double start_loglik = 0.0;
    double end_loglik = 0.0;

    bool operator==(const SpanCandidate&) const = default;
};

SpanCandidate make_candidate(const std::string& doc_id, const std::string& chunk_id, const ExtractedSpan& span);

enum class SpanVerdict { accepted, too_long, reserved_marker };

std::string_view verdict_name(SpanVerdict v) noexcept;

struct SpanRules {
    std::size_t max_tokens = defaults::kMaxSpanTokens;
    /// Compared case-sensitively against alphanumeric runs of the span, with
    /// surrounding brackets stripped, so "[SEP]" and "SEP" are the same marker.
    std::vector<std::string> reserved_markers{"[CLS]", "[SEP]", "[PAD]", "CLS", "SEP", "PAD"};
};

SpanVerdict filter_span(const SpanCandidate& span, const SpanRules& rules = {});

/// True when `text` contains one of the markers as a whole token.
bool contains_reserved_marker(std::string_view text, const std::vector<std::string>& markers);

/// Highest start_loglik per document; ties go to the smaller chunk_id, then text.
std::map<std::string, SpanCandidate> best_span_per_doc(const std::vector<SpanCandidate>& spans);

struct AnswerSpan {
    std::string doc_id;
    std::string paper_title;
    std::string text;
    double start_loglik = 0.0;
    double retrieval_score = 0.0;
    double final_score = 0.0;
};

/// final = alpha * minmax(start_loglik) + (1 - alpha) * minmax(aggregated),
/// both normalized over the answer set. Sorted descending (doc_id on ties)
/// and cut to `cap`. paper_title is left empty.
std::vector<AnswerSpan> rank_answers(const std::map<std::string, SpanCandidate>& best,
                                     const std::vector<FusedCandidate>& candidates,
                                     double alpha = defaults::kAnswerAlpha, std::size_t cap = defaults::kMaxAnswers);

enum class ResponseKind { answers, document_list, clarification, smalltalk };

std::string_view kind_name(ResponseKind k) noexcept;

struct ResponseItem {
    std::string text;
    std::optional<std::string> paper_title;
    std::string doc_id;
    double score = 0.0;
};

struct SystemResponse {
    ResponseKind kind = ResponseKind::clarification;
    std::vector<ResponseItem> items;
    nlohmann::json diagnostics = nlohmann::json::object();
};

inline constexpr std::string_view kClarificationPrompt =
    "I couldn't find anything in the literature for that. Could you rephrase the question or add more detail?";

SystemResponse clarification_response();

struct AnswerOptions {
    double alpha = defaults::kAnswerAlpha;
    std::size_t max_docs = defaults::kTopK;
    std::size_t max_answers = defaults::kMaxAnswers;
    std::size_t max_document_list = defaults::kMaxDocumentList;
    SpanRules rules;
};

/// Extracts spans from every chunk of the top retrieved documents and builds
/// the response: answers if any span survives the rules, otherwise a list of
/// the best document titles, or a clarification prompt when nothing was
/// retrieved. A chunk whose extraction throws is skipped and noted in the trace.
SystemResponse answer_pipeline(std::string_view question, const std::vector<FusedCandidate>& retrieved,
                               const Corpus& corpus, const SpanExtractor& extractor, const AnswerOptions& opts = {});

nlohmann::json to_json(const SystemResponse& r, bool include_diagnostics);
nlohmann::json to_json(const FusedCandidate& c);

}  // namespace medlit
