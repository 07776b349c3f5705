#include "medlit/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "medlit/error.hpp"
#include "medlit/text.hpp"

namespace medlit {

std::string_view strategy_name(Strategy s) noexcept {
    switch (s) {
        case Strategy::sparse_only: return "sparse_only";
        case Strategy::dense_only: return "dense_only";
        case Strategy::union_: return "union";
    }
    return "union";
}

Strategy parse_strategy(std::string_view name) {
    const std::string n = to_lower_ascii(name);
    if (n == "sparse_only" || n == "sparse" || n == "bm25") return Strategy::sparse_only;
    if (n == "dense_only" || n == "dense" || n == "cosine") return Strategy::dense_only;
    if (n == "union" || n == "hybrid") return Strategy::union_;
    throw InvalidParameter("unknown retrieval strategy: " + std::string(name));
}

void FusionConfig::validate() const {
    if (top_k == 0) throw InvalidParameter("top_k must be at least 1");
    if (!std::isfinite(bm25_threshold) || !std::isfinite(cosine_threshold)) {
        throw InvalidParameter("fusion thresholds must be finite");
    }
    if (!std::isfinite(w_bm25) || !std::isfinite(w_cosine) || w_bm25 < 0 || w_cosine < 0) {
        throw InvalidParameter("fusion weights must be finite and non-negative");
    }
}

std::vector<ScoredDoc> threshold_filter(const std::vector<ScoredDoc>& scored, double threshold) {
    std::vector<ScoredDoc> out;
    std::copy_if(scored.begin(), scored.end(), std::back_inserter(out),
                 [threshold](const ScoredDoc& s) { return s.score >= threshold; });
    return out;
}

std::vector<double> minmax_normalize(const std::vector<double>& scores) {
    if (scores.empty()) return {};
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    const double min = *lo;
    const double range = *hi - min;
    std::vector<double> out(scores.size(), 1.0);
    if (range > 0.0) {
        for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - min) / range;
    }
    return out;
}

std::vector<FusedCandidate> fuse(const std::vector<ScoredDoc>& bm25_results,
                                 const std::vector<ScoredDoc>& dense_results, const FusionConfig& cfg,
                                 std::size_t* pool_size) {
    cfg.validate();
    const bool use_sparse = cfg.strategy != Strategy::dense_only;
    const bool use_dense = cfg.strategy != Strategy::sparse_only;

    std::unordered_map<std::string_view, double> bm25_raw, cos_raw;
    for (const auto& s : bm25_results) bm25_raw.emplace(s.doc_id, s.score);
    for (const auto& s : dense_results) cos_raw.emplace(s.doc_id, s.score);

    std::vector<FusedCandidate> pool;
    std::unordered_map<std::string_view, std::size_t> slot;
    auto admit = [&](const ScoredDoc& s) {
        if (slot.emplace(s.doc_id, pool.size()).second) pool.push_back(FusedCandidate{s.doc_id});
    };
    if (use_sparse) {
        for (const auto& s : bm25_results) {
            if (s.score >= cfg.bm25_threshold) admit(s);
        }
    }
    if (use_dense) {
        for (const auto& s : dense_results) {
            if (s.score >= cfg.cosine_threshold) admit(s);
        }
    }
    if (pool_size) *pool_size = pool.size();
    if (pool.empty()) return pool;

    std::vector<double> b(pool.size()), c(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        auto& cand = pool[i];
        if (auto it = bm25_raw.find(cand.doc_id); it != bm25_raw.end()) cand.bm25_raw = it->second;
        if (auto it = cos_raw.find(cand.doc_id); it != cos_raw.end()) cand.cosine_raw = it->second;
        cand.passed_bm25 = bm25_raw.contains(cand.doc_id) && cand.bm25_raw >= cfg.bm25_threshold;
        cand.passed_cosine = cos_raw.contains(cand.doc_id) && cand.cosine_raw >= cfg.cosine_threshold;
        b[i] = cand.bm25_raw;
        c[i] = cand.cosine_raw;
    }
    const auto bn = minmax_normalize(b);
    const auto cn = minmax_normalize(c);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        auto& cand = pool[i];
        cand.bm25_norm = use_sparse ? bn[i] : 0.0;
        cand.cosine_norm = use_dense ? cn[i] : 0.0;
        cand.aggregated = cfg.w_bm25 * cand.bm25_norm + cfg.w_cosine * cand.cosine_norm;
    }

    std::sort(pool.begin(), pool.end(), [](const FusedCandidate& x, const FusedCandidate& y) {
        if (x.aggregated != y.aggregated) return x.aggregated > y.aggregated;
        return x.doc_id < y.doc_id;
    });
    if (pool.size() > cfg.top_k) pool.resize(cfg.top_k);
    return pool;
}

namespace {

ArmSummary summarize(const std::vector<ScoredDoc>& scored, double threshold) {
    ArmSummary s;
    s.scored = scored.size();
    s.top_score = scored.empty() ? 0.0 : scored.front().score;
    s.passed = static_cast<std::size_t>(std::count_if(
        scored.begin(), scored.end(), [threshold](const ScoredDoc& d) { return d.score >= threshold; }));
    return s;
}

}  // namespace

RetrievalResult retrieve(std::string_view query_text, const InvertedIndex& index, const DenseStore& store,
                         const EmbeddingProvider& provider, const FusionConfig& cfg) {
    cfg.validate();
    RetrievalResult result;
    FusionConfig effective = cfg;

    const auto sparse = index.bm25_scores(tokenize(query_text));
    std::vector<ScoredDoc> dense;
    try {
        dense = store.dense_scores(provider.embed(query_text));
    } catch (const Error& e) {
        result.dense_unavailable = true;
        result.warnings.push_back(std::string("dense arm unavailable, using sparse_only: ") + e.what());
        effective.strategy = Strategy::sparse_only;
    }

    result.strategy_used = effective.strategy;
    result.sparse = summarize(sparse, effective.bm25_threshold);
    result.dense = summarize(dense, effective.cosine_threshold);
    result.candidates = fuse(sparse, dense, effective, &result.pool_size);
    return result;
}

}  // namespace medlit
