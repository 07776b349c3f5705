#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "medlit/defaults.hpp"
#include "medlit/dense_index.hpp"
#include "medlit/sparse_index.hpp"

namespace medlit {

enum class Strategy { sparse_only, dense_only, union_ };

std::string_view strategy_name(Strategy s) noexcept;
/// Accepts "sparse_only"/"sparse"/"bm25", "dense_only"/"dense"/"cosine", "union"/"hybrid".
Strategy parse_strategy(std::string_view name);

struct FusionConfig {
    double bm25_threshold = defaults::kBm25Threshold;
    double cosine_threshold = defaults::kCosineThreshold;
    std::size_t top_k = defaults::kTopK;
    Strategy strategy = Strategy::union_;
    double w_bm25 = 1.0;
    double w_cosine = 1.0;

    /// Throws InvalidParameter when top_k is 0 or a threshold/weight is not finite.
    void validate() const;
};

struct FusedCandidate {
    std::string doc_id;
    double bm25_raw = 0.0;
    double cosine_raw = 0.0;
    double bm25_norm = 0.0;
    double cosine_norm = 0.0;
    double aggregated = 0.0;
    bool passed_bm25 = false;
    bool passed_cosine = false;

    bool operator==(const FusedCandidate&) const = default;
};

/// Keeps entries with score >= threshold, preserving order.
std::vector<ScoredDoc> threshold_filter(const std::vector<ScoredDoc>& scored, double threshold);

/// (s - min) / (max - min); all ones when the range is degenerate.
std::vector<double> minmax_normalize(const std::vector<double>& scores);

/// Thresholds each arm, forms the candidate pool for the strategy, min-max
/// normalizes each arm over the pool (an arm's raw score is 0 for documents it
/// did not score) and ranks by the weighted sum. An arm outside the strategy
/// contributes nothing and its normalized score is reported as 0.
std::vector<FusedCandidate> fuse(const std::vector<ScoredDoc>& bm25_results,
                                 const std::vector<ScoredDoc>& dense_results, const FusionConfig& cfg,
                                 std::size_t* pool_size = nullptr);

struct ArmSummary {
    std::size_t scored = 0;
    std::size_t passed = 0;
    double top_score = 0.0;
};

struct RetrievalResult {
    std::vector<FusedCandidate> candidates;
    Strategy strategy_used = Strategy::union_;
    bool dense_unavailable = false;
    std::vector<std::string> warnings;
    ArmSummary sparse;
    ArmSummary dense;
    std::size_t pool_size = 0;  // candidates before the top_k cut
};

/// Scores the query with both arms and fuses. If the embedding provider
/// fails the query falls back to sparse_only and a warning is recorded.
RetrievalResult retrieve(std::string_view query_text, const InvertedIndex& index, const DenseStore& store,
                         const EmbeddingProvider& provider, const FusionConfig& cfg);

}  // namespace medlit
