#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "medlit/corpus.hpp"
#include "medlit/dense_index.hpp"
#include "medlit/fusion.hpp"
#include "medlit/sparse_index.hpp"

namespace medlit {

struct Qrel {
    std::string topic_id;
    std::string doc_id;
    int grade = 0;  // 0 not relevant, 1 partially, 2 highly

    bool operator==(const Qrel&) const = default;
};

struct QrelParseResult {
    std::vector<Qrel> qrels;
    std::vector<SkippedLine> rejected;
};

/// "topic iteration doc_id grade" per line; iteration is ignored. Grades
/// outside {0,1,2}, malformed lines and repeated (topic, doc) pairs are
/// rejected with their line number.
QrelParseResult parse_qrels(std::istream& in);

struct Topic {
    std::string topic_id;
    std::string query_text;
};

struct TopicParseResult {
    std::vector<Topic> topics;
    std::vector<SkippedLine> rejected;
};

/// Line-delimited {"topic_id": ..., "query": ...} objects.
TopicParseResult parse_topics(std::istream& in);

using QrelKey = std::pair<std::string, std::string>;  // (topic_id, doc_id)
using BinaryQrels = std::map<QrelKey, bool>;

/// Grade >= 1 is relevant.
BinaryQrels binarize(const std::vector<Qrel>& qrels);

enum class Averaging { micro, macro };

struct Counts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    Counts& operator+=(const Counts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    bool operator==(const Counts&) const = default;
};

struct F1Result {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    Counts counts;
};

/// Zero denominators give zero.
F1Result f1_from_counts(const Counts& c);

using RetrievedSets = std::map<std::string, std::set<std::string>>;

/// Counts only judged (topic, doc) pairs; unjudged retrieved documents are ignored.
/// Micro pools all pairs; macro averages per-topic F1 over judged topics.
F1Result f1_for_strategy(const RetrievedSets& retrieved, const BinaryQrels& qrels,
                         Averaging averaging = Averaging::micro);

/// Per-topic counts for the same inputs.
std::map<std::string, Counts> topic_counts(const RetrievedSets& retrieved, const BinaryQrels& qrels);

/// Inclusive range min, min + step, ... <= max. Values are rounded to 1e-9 so
/// that e.g. 277 * 0.01 lands on 2.77 exactly as printed.
struct GridAxis {
    double min = 0.0;
    double max = 0.0;
    double step = 1.0;

    std::vector<double> points() const;
};

inline GridAxis default_bm25_axis() { return {0.0, 10.0, 0.01}; }
inline GridAxis default_cosine_axis() { return {0.0, 1.0, 0.01}; }

/// Raw scores of every judged document for one topic, computed once and
/// re-thresholded for every grid point. A document an arm did not score
/// carries -inf for that arm.
struct JudgedScore {
    std::string doc_id;
    bool relevant = false;
    double bm25 = 0.0;
    double cosine = 0.0;
};

struct TopicScores {
    std::string topic_id;
    std::vector<JudgedScore> judged;
    std::vector<ScoredDoc> sparse_all;  // full arm outputs, used when a top-k cut is evaluated
    std::vector<ScoredDoc> dense_all;
};

struct ScoreCache {
    std::vector<TopicScores> topics;
};

/// Judgments for topics absent from `topics` are ignored.
ScoreCache build_score_cache(const std::vector<Topic>& topics, const BinaryQrels& qrels, const InvertedIndex& index,
                             const DenseStore& store, const EmbeddingProvider& provider);

struct EvalOptions {
    Averaging averaging = Averaging::micro;
    /// When set, each topic's retrieved set is the fused top-k instead of all threshold survivors.
    std::optional<std::size_t> top_k;
};

/// Thresholds are {bm25} for sparse_only, {cosine} for dense_only, {bm25, cosine} for union.
struct PointEvaluation {
    F1Result overall;
    std::map<std::string, Counts> per_topic;
};

PointEvaluation evaluate_thresholds(Strategy strategy, const std::vector<double>& thresholds, const ScoreCache& cache,
                                    const EvalOptions& options = {});

/// Retrieved sets a strategy produces at the given thresholds (judged and unjudged documents).
RetrievedSets retrieved_at(Strategy strategy, const std::vector<double>& thresholds, const ScoreCache& cache,
                           const EvalOptions& options = {});

struct GridPoint {
    std::vector<double> thresholds;
    F1Result result;
};

struct GridSearchResult {
    Strategy strategy = Strategy::union_;
    std::vector<double> best_thresholds;
    F1Result best;
    std::vector<GridPoint> grid;  // lexicographic order of the threshold vector
};

/// Evaluates every grid point; the argmax goes to the lexicographically
/// smallest threshold vector on ties. Axes as in evaluate_thresholds.
GridSearchResult grid_search(Strategy strategy, const std::vector<GridAxis>& axes, const ScoreCache& cache,
                             const EvalOptions& options = {});

GridSearchResult grid_search(Strategy strategy, const std::vector<GridAxis>& axes, const std::vector<Topic>& topics,
                             const BinaryQrels& qrels, const InvertedIndex& index, const DenseStore& store,
                             const EmbeddingProvider& provider, const EvalOptions& options = {});

struct StrategyGrids {
    GridAxis bm25 = default_bm25_axis();
    GridAxis cosine = default_cosine_axis();
};

struct StrategyRow {
    Strategy strategy = Strategy::union_;
    F1Result result;
    std::vector<double> thresholds;
    std::map<std::string, F1Result> per_topic;
};

struct EvalReport {
    std::vector<StrategyRow> rows;  // sparse_only, dense_only, union
    F1Result union_at_solo_optima;
    std::vector<double> solo_optima;
    Averaging averaging = Averaging::micro;
};

EvalReport compare_strategies(const ScoreCache& cache, const StrategyGrids& grids = {},
                              const EvalOptions& options = {});

EvalReport compare_strategies(const std::vector<Topic>& topics, const BinaryQrels& qrels, const InvertedIndex& index,
                              const DenseStore& store, const EmbeddingProvider& provider,
                              const StrategyGrids& grids = {}, const EvalOptions& options = {});

std::string format_report(const EvalReport& report);
nlohmann::json to_json(const EvalReport& report);

}  // namespace medlit
