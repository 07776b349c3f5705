#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "medlit/corpus.hpp"
#include "medlit/defaults.hpp"

namespace medlit {

struct Bm25Params {
    double k1 = defaults::kBm25K1;
    double b = defaults::kBm25B;

    bool operator==(const Bm25Params&) const = default;
};

struct Posting {
    std::uint32_t doc_ordinal = 0;
    std::uint32_t term_frequency = 0;

    bool operator==(const Posting&) const = default;
};

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const ScoredDoc&) const = default;
};

/// Orders by score descending, then doc_id ascending.
void sort_by_score(std::vector<ScoredDoc>& scored);

/// Text already split into tokens, keyed by document id.
struct TokenizedDoc {
    std::string doc_id;
    std::vector<std::string> tokens;
};

/// Immutable term -> postings map over document abstracts, scored with Okapi BM25:
///
///   score(d, q) = sum over query tokens t of
///                 idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
///   idf(t)      = ln(1 + (N - df + 0.5) / (df + 0.5))
///
/// Repeated query tokens contribute once per occurrence.
class InvertedIndex {
public:
    static InvertedIndex build(const std::vector<TokenizedDoc>& docs, Bm25Params params = {});

    std::vector<ScoredDoc> bm25_scores(const std::vector<std::string>& query_tokens) const;

    double idf(std::uint32_t document_frequency) const noexcept;

    const std::vector<Posting>* postings(const std::string& term) const;

    std::size_t doc_count() const noexcept { return doc_ids_.size(); }
    std::size_t term_count() const noexcept { return terms_.size(); }
    double avg_doc_length() const noexcept { return avg_doc_length_; }
    const Bm25Params& params() const noexcept { return params_; }
    const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
    const std::vector<std::uint32_t>& doc_lengths() const noexcept { return doc_lengths_; }

    /// Terms in ascending byte order.
    std::vector<std::string> sorted_terms() const;

    /// Layout is described in docs/index_format.md.
    void save(std::ostream& out) const;
    static InvertedIndex load(std::istream& in);

    bool operator==(const InvertedIndex& other) const;

private:
    Bm25Params params_;
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> terms_;

    void finalize();
};

InvertedIndex build_index(const std::vector<Document>& docs, Bm25Params params = {});

inline constexpr char kIndexMagic[8] = {'M', 'L', 'B', 'M', '2', '5', 'I', 'X'};
inline constexpr std::uint32_t kIndexFormatVersion = 1;

}  // namespace medlit
