#include "medlit/trec_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "medlit/error.hpp"
#include "medlit/text.hpp"

namespace medlit {
namespace {

constexpr double kMissing = -std::numeric_limits<double>::infinity();

/// Scores of one arm sorted descending with a running count of relevant entries.
struct SortedArm {
    std::vector<double> scores;
    std::vector<std::size_t> relevant_prefix{0};

    void add_sorted(const std::vector<std::pair<double, bool>>& desc) {
        for (const auto& [s, rel] : desc) {
            scores.push_back(s);
            relevant_prefix.push_back(relevant_prefix.back() + (rel ? 1 : 0));
        }
    }

    /// (retrieved, relevant retrieved) for score >= threshold.
    std::pair<std::size_t, std::size_t> at(double threshold) const {
        const auto it = std::partition_point(scores.begin(), scores.end(), [threshold](double s) { return s >= threshold; });
        const auto k = static_cast<std::size_t>(it - scores.begin());
        return {k, relevant_prefix[k]};
    }
};

SortedArm make_arm(std::vector<std::pair<double, bool>> entries) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    SortedArm arm;
    arm.add_sorted(entries);
    return arm;
}

Counts counts_from(std::size_t retrieved, std::size_t relevant_retrieved, std::size_t relevant_total) {
    return Counts{relevant_retrieved, retrieved - relevant_retrieved, relevant_total - relevant_retrieved};
}

F1Result aggregate(const std::map<std::string, Counts>& per_topic, Averaging averaging) {
    Counts total;
    for (const auto& [_, c] : per_topic) total += c;
    if (averaging == Averaging::micro || per_topic.empty()) return f1_from_counts(total);
    F1Result r;
    r.counts = total;
    for (const auto& [_, c] : per_topic) {
        const auto t = f1_from_counts(c);
        r.f1 += t.f1;
        r.precision += t.precision;
        r.recall += t.recall;
    }
    const auto n = static_cast<double>(per_topic.size());
    r.f1 /= n;
    r.precision /= n;
    r.recall /= n;
    return r;
}

std::size_t expected_arity(Strategy s) {
    return s == Strategy::union_ ? 2 : 1;
}

FusionConfig fusion_for(Strategy strategy, const std::vector<double>& thresholds, std::size_t top_k) {
    FusionConfig cfg;
    cfg.strategy = strategy;
    cfg.top_k = top_k;
    switch (strategy) {
        case Strategy::sparse_only: cfg.bm25_threshold = thresholds[0]; break;
        case Strategy::dense_only: cfg.cosine_threshold = thresholds[0]; break;
        case Strategy::union_:
            cfg.bm25_threshold = thresholds[0];
            cfg.cosine_threshold = thresholds[1];
            break;
    }
    return cfg;
}

BinaryQrels cache_qrels(const ScoreCache& cache) {
    BinaryQrels q;
    for (const auto& t : cache.topics) {
        for (const auto& j : t.judged) q.emplace(QrelKey{t.topic_id, j.doc_id}, j.relevant);
    }
    return q;
}

/// Fast per-topic counting for threshold-only evaluation.
class TopicCounter {
public:
    TopicCounter(const TopicScores& topic, Strategy strategy, const std::vector<double>& cosine_points)
        : strategy_(strategy) {
        for (const auto& j : topic.judged) relevant_total_ += j.relevant ? 1 : 0;
        std::vector<std::pair<double, bool>> b, c;
        for (const auto& j : topic.judged) {
            b.emplace_back(j.bm25, j.relevant);
            c.emplace_back(j.cosine, j.relevant);
        }
        if (strategy == Strategy::sparse_only) sparse_ = make_arm(b);
        if (strategy == Strategy::dense_only) dense_ = make_arm(c);
        if (strategy == Strategy::union_) {
            // Entries sorted by cosine; for each cosine threshold the first k are
            // retrieved by the dense arm and the rest are left to BM25.
            std::vector<const JudgedScore*> by_cos;
            for (const auto& j : topic.judged) by_cos.push_back(&j);
            std::stable_sort(by_cos.begin(), by_cos.end(),
                             [](const JudgedScore* x, const JudgedScore* y) { return x->cosine > y->cosine; });
            std::vector<double> cos_desc;
            for (const auto* j : by_cos) cos_desc.push_back(j->cosine);
            std::unordered_map<std::size_t, std::size_t> rest_for_k;
            for (double theta : cosine_points) {
                const auto k = static_cast<std::size_t>(
                    std::partition_point(cos_desc.begin(), cos_desc.end(), [theta](double s) { return s >= theta; }) -
                    cos_desc.begin());
                auto [it, inserted] = rest_for_k.try_emplace(k, rests_.size());
                if (inserted) {
                    std::size_t rel = 0;
                    for (std::size_t i = 0; i < k; ++i) rel += by_cos[i]->relevant ? 1 : 0;
                    std::vector<std::pair<double, bool>> rest;
                    for (std::size_t i = k; i < by_cos.size(); ++i) rest.emplace_back(by_cos[i]->bm25, by_cos[i]->relevant);
                    rests_.push_back(Rest{k, rel, make_arm(std::move(rest))});
                }
                rest_index_.push_back(it->second);
            }
        }
    }

    Counts single(double threshold) const {
        const auto& arm = strategy_ == Strategy::sparse_only ? sparse_ : dense_;
        const auto [k, rel] = arm.at(threshold);
        return counts_from(k, rel, relevant_total_);
    }

    Counts combined(double bm25_threshold, std::size_t cosine_index) const {
        const Rest& r = rests_[rest_index_[cosine_index]];
        const auto [k, rel] = r.bm25.at(bm25_threshold);
        return counts_from(r.dense_retrieved + k, r.dense_relevant + rel, relevant_total_);
    }

private:
    struct Rest {
        std::size_t dense_retrieved;
        std::size_t dense_relevant;
        SortedArm bm25;
    };

    Strategy strategy_;
    std::size_t relevant_total_ = 0;
    SortedArm sparse_, dense_;
    std::vector<Rest> rests_;
    std::vector<std::size_t> rest_index_;
};

std::string format_thresholds(const std::vector<double>& t) {
    std::vector<std::string> parts;
    for (double v : t) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", v);
        std::string s = buf;
        while (s.size() > 1 && s.back() == '0') s.pop_back();
        if (s.back() == '.') s += '0';
        parts.push_back(s);
    }
    return join(parts, ", ");
}

std::string row_label(Strategy s) {
    switch (s) {
        case Strategy::sparse_only: return "Okapi BM25";
        case Strategy::dense_only: return "Cosine similarity";
        case Strategy::union_: return "Okapi BM25 + cosine similarity";
    }
    return {};
}

}  // namespace

QrelParseResult parse_qrels(std::istream& in) {
    QrelParseResult result;
    std::set<QrelKey> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::istringstream ss(line);
        std::string topic, iteration, doc, grade_s, extra;
        if (!(ss >> topic >> iteration >> doc >> grade_s) || (ss >> extra)) {
            result.rejected.push_back({line_no, "expected 4 whitespace-separated fields"});
            continue;
        }
        int grade = 0;
        try {
            std::size_t used = 0;
            grade = std::stoi(grade_s, &used);
            if (used != grade_s.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            result.rejected.push_back({line_no, "grade is not an integer: " + grade_s});
            continue;
        }
        if (grade < 0 || grade > 2) {
            result.rejected.push_back({line_no, "grade out of range {0,1,2}: " + grade_s});
            continue;
        }
        if (!seen.insert({topic, doc}).second) {
            result.rejected.push_back({line_no, "duplicate judgment for topic " + topic + ", doc " + doc});
            continue;
        }
        result.qrels.push_back(Qrel{topic, doc, grade});
    }
    return result;
}

TopicParseResult parse_topics(std::istream& in) {
    TopicParseResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            Topic t;
            const auto& id = j.at("topic_id");
            t.topic_id = id.is_string() ? id.get<std::string>() : id.dump();
            t.query_text = j.at("query").get<std::string>();
            if (trim(t.topic_id).empty() || trim(t.query_text).empty()) {
                result.rejected.push_back({line_no, "empty topic_id or query"});
                continue;
            }
            result.topics.push_back(std::move(t));
        } catch (const nlohmann::json::exception& e) {
            result.rejected.push_back({line_no, std::string("malformed topic: ") + e.what()});
        }
    }
    return result;
}

BinaryQrels binarize(const std::vector<Qrel>& qrels) {
    BinaryQrels out;
    for (const auto& q : qrels) out.emplace(QrelKey{q.topic_id, q.doc_id}, q.grade >= 1);
    return out;
}

F1Result f1_from_counts(const Counts& c) {
    F1Result r;
    r.counts = c;
    r.precision = (c.tp + c.fp) ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    r.recall = (c.tp + c.fn) ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

std::map<std::string, Counts> topic_counts(const RetrievedSets& retrieved, const BinaryQrels& qrels) {
    std::map<std::string, Counts> per_topic;
    static const std::set<std::string> kNone;
    for (const auto& [key, relevant] : qrels) {
        const auto& [topic, doc] = key;
        auto it = retrieved.find(topic);
        const bool got = (it == retrieved.end() ? kNone : it->second).contains(doc);
        auto& c = per_topic[topic];
        if (got && relevant) ++c.tp;
        else if (got) ++c.fp;
        else if (relevant) ++c.fn;
    }
    return per_topic;
}

F1Result f1_for_strategy(const RetrievedSets& retrieved, const BinaryQrels& qrels, Averaging averaging) {
    return aggregate(topic_counts(retrieved, qrels), averaging);
}

std::vector<double> GridAxis::points() const {
    if (!std::isfinite(min) || !std::isfinite(max) || !std::isfinite(step)) {
        throw InvalidParameter("grid axis bounds must be finite");
    }
    if (!(step > 0.0)) throw InvalidParameter("grid step must be positive");
    if (min > max) throw InvalidParameter("grid min exceeds max");
    const double span = (max - min) / step;
    if (span > 1e7) throw InvalidParameter("grid axis too fine");
    const auto n = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    std::vector<double> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) pts.push_back(std::round((min + static_cast<double>(i) * step) * 1e9) / 1e9);
    return pts;
}

ScoreCache build_score_cache(const std::vector<Topic>& topics, const BinaryQrels& qrels, const InvertedIndex& index,
                             const DenseStore& store, const EmbeddingProvider& provider) {
    std::map<std::string, std::vector<std::pair<std::string, bool>>> judged;
    for (const auto& [key, rel] : qrels) judged[key.first].emplace_back(key.second, rel);

    ScoreCache cache;
    std::set<std::string> seen;
    for (const auto& t : topics) {
        if (!seen.insert(t.topic_id).second) throw InvalidInput("duplicate topic id: " + t.topic_id);
        TopicScores ts;
        ts.topic_id = t.topic_id;
        ts.sparse_all = index.bm25_scores(tokenize(t.query_text));
        ts.dense_all = store.dense_scores(provider.embed(t.query_text));
        std::unordered_map<std::string_view, double> b, c;
        for (const auto& s : ts.sparse_all) b.emplace(s.doc_id, s.score);
        for (const auto& s : ts.dense_all) c.emplace(s.doc_id, s.score);
        for (const auto& [doc, rel] : judged[t.topic_id]) {
            const auto bi = b.find(doc);
            const auto ci = c.find(doc);
            ts.judged.push_back(JudgedScore{doc, rel, bi == b.end() ? kMissing : bi->second,
                                            ci == c.end() ? kMissing : ci->second});
        }
        cache.topics.push_back(std::move(ts));
    }
    return cache;
}

RetrievedSets retrieved_at(Strategy strategy, const std::vector<double>& thresholds, const ScoreCache& cache,
                           const EvalOptions& options) {
    if (thresholds.size() != expected_arity(strategy)) throw InvalidInput("wrong number of thresholds for strategy");
    RetrievedSets out;
    for (const auto& t : cache.topics) {
        auto& set = out[t.topic_id];
        if (options.top_k) {
            const auto cfg = fusion_for(strategy, thresholds, *options.top_k);
            for (const auto& c : fuse(t.sparse_all, t.dense_all, cfg)) set.insert(c.doc_id);
            continue;
        }
        const bool sparse = strategy != Strategy::dense_only;
        const bool dense = strategy != Strategy::sparse_only;
        const double tb = thresholds[0];
        const double tc = strategy == Strategy::union_ ? thresholds[1] : thresholds[0];
        if (sparse) {
            for (const auto& s : t.sparse_all) if (s.score >= tb) set.insert(s.doc_id);
        }
        if (dense) {
            for (const auto& s : t.dense_all) if (s.score >= tc) set.insert(s.doc_id);
        }
    }
    return out;
}

PointEvaluation evaluate_thresholds(Strategy strategy, const std::vector<double>& thresholds, const ScoreCache& cache,
                                    const EvalOptions& options) {
    PointEvaluation e;
    e.per_topic = topic_counts(retrieved_at(strategy, thresholds, cache, options), cache_qrels(cache));
    e.overall = aggregate(e.per_topic, options.averaging);
    return e;
}

GridSearchResult grid_search(Strategy strategy, const std::vector<GridAxis>& axes, const ScoreCache& cache,
                             const EvalOptions& options) {
    if (axes.size() != expected_arity(strategy)) throw InvalidInput("wrong number of grid axes for strategy");
    std::vector<std::vector<double>> pts;
    for (const auto& a : axes) pts.push_back(a.points());
    for (const auto& p : pts) {
        if (p.empty()) throw InvalidInput("empty grid");
    }

    GridSearchResult result;
    result.strategy = strategy;

    if (options.top_k) {
        // Fused ranking depends on the whole pool; evaluate each point directly.
        if (strategy == Strategy::union_) {
            for (double b : pts[0]) {
                for (double c : pts[1]) result.grid.push_back({{b, c}, evaluate_thresholds(strategy, {b, c}, cache, options).overall});
            }
        } else {
            for (double v : pts[0]) result.grid.push_back({{v}, evaluate_thresholds(strategy, {v}, cache, options).overall});
        }
    } else {
        const std::vector<double> no_cos;
        std::vector<TopicCounter> counters;
        std::vector<std::string> ids;
        for (const auto& t : cache.topics) {
            if (t.judged.empty()) continue;
            counters.emplace_back(t, strategy, strategy == Strategy::union_ ? pts[1] : no_cos);
            ids.push_back(t.topic_id);
        }
        auto evaluate = [&](auto&& counts_for) {
            std::map<std::string, Counts> per_topic;
            for (std::size_t i = 0; i < counters.size(); ++i) per_topic[ids[i]] = counts_for(counters[i]);
            return aggregate(per_topic, options.averaging);
        };
        if (strategy == Strategy::union_) {
            result.grid.reserve(pts[0].size() * pts[1].size());
            for (double b : pts[0]) {
                for (std::size_t ci = 0; ci < pts[1].size(); ++ci) {
                    result.grid.push_back({{b, pts[1][ci]}, evaluate([&](const TopicCounter& tc) { return tc.combined(b, ci); })});
                }
            }
        } else {
            for (double v : pts[0]) {
                result.grid.push_back({{v}, evaluate([&](const TopicCounter& tc) { return tc.single(v); })});
            }
        }
    }

    const GridPoint* best = &result.grid.front();
    for (const auto& p : result.grid) {
        if (p.result.f1 > best->result.f1) best = &p;
    }
    result.best_thresholds = best->thresholds;
    result.best = best->result;
    return result;
}

GridSearchResult grid_search(Strategy strategy, const std::vector<GridAxis>& axes, const std::vector<Topic>& topics,
                             const BinaryQrels& qrels, const InvertedIndex& index, const DenseStore& store,
                             const EmbeddingProvider& provider, const EvalOptions& options) {
    return grid_search(strategy, axes, build_score_cache(topics, qrels, index, store, provider), options);
}

EvalReport compare_strategies(const ScoreCache& cache, const StrategyGrids& grids, const EvalOptions& options) {
    EvalReport report;
    report.averaging = options.averaging;
    const std::vector<std::pair<Strategy, std::vector<GridAxis>>> plan{
        {Strategy::sparse_only, {grids.bm25}},
        {Strategy::dense_only, {grids.cosine}},
        {Strategy::union_, {grids.bm25, grids.cosine}},
    };
    for (const auto& [strategy, axes] : plan) {
        const auto gs = grid_search(strategy, axes, cache, options);
        StrategyRow row{strategy, gs.best, gs.best_thresholds, {}};
        for (const auto& [topic, c] : evaluate_thresholds(strategy, gs.best_thresholds, cache, options).per_topic) {
            row.per_topic.emplace(topic, f1_from_counts(c));
        }
        report.rows.push_back(std::move(row));
    }
    report.solo_optima = {report.rows[0].thresholds[0], report.rows[1].thresholds[0]};
    report.union_at_solo_optima = evaluate_thresholds(Strategy::union_, report.solo_optima, cache, options).overall;
    return report;
}

EvalReport compare_strategies(const std::vector<Topic>& topics, const BinaryQrels& qrels, const InvertedIndex& index,
                              const DenseStore& store, const EmbeddingProvider& provider, const StrategyGrids& grids,
                              const EvalOptions& options) {
    return compare_strategies(build_score_cache(topics, qrels, index, store, provider), grids, options);
}

std::string format_report(const EvalReport& report) {
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-32s %-8s %s\n", "Retrieval method", "F1", "Threshold");
    out << buf;
    for (const auto& row : report.rows) {
        std::snprintf(buf, sizeof buf, "%-32s %-8.4f %s\n", row_label(row.strategy).c_str(), row.result.f1,
                      format_thresholds(row.thresholds).c_str());
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "(union at solo optima %s: F1 %.4f; %s-averaged)\n",
                  format_thresholds(report.solo_optima).c_str(), report.union_at_solo_optima.f1,
                  report.averaging == Averaging::micro ? "micro" : "macro");
    out << buf;
    return out.str();
}

nlohmann::json to_json(const EvalReport& report) {
    auto f1_json = [](const F1Result& r) {
        return nlohmann::json{{"f1", r.f1},
                              {"precision", r.precision},
                              {"recall", r.recall},
                              {"tp", r.counts.tp},
                              {"fp", r.counts.fp},
                              {"fn", r.counts.fn}};
    };
    auto rows = nlohmann::json::array();
    for (const auto& row : report.rows) {
        auto per_topic = nlohmann::json::object();
        for (const auto& [topic, r] : row.per_topic) per_topic[topic] = f1_json(r);
        auto j = f1_json(row.result);
        j["strategy"] = std::string(strategy_name(row.strategy));
        j["thresholds"] = row.thresholds;
        j["per_topic"] = std::move(per_topic);
        rows.push_back(std::move(j));
    }
    auto solo = f1_json(report.union_at_solo_optima);
    solo["thresholds"] = report.solo_optima;
    return {{"averaging", report.averaging == Averaging::micro ? "micro" : "macro"},
            {"rows", rows},
            {"union_at_solo_optima", solo}};
}

}  // namespace medlit
