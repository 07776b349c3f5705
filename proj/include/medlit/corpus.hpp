#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "medlit/defaults.hpp"

namespace medlit {

/// One corpus line as read from disk; a doc_id may appear once per source.
struct RawRecord {
    std::string doc_id;
    std::string source;
    std::string title;
    std::string abstract_text;
    std::vector<std::string> body_paragraphs;

    bool operator==(const RawRecord&) const = default;
};

struct Document {
    std::string doc_id;
    std::string title;
    std::string abstract_text;
    std::vector<std::string> abstract_tokens;
    std::vector<std::string> body_paragraphs;
    std::string source;
};

/// A window of body tokens. Offsets index the document's body token sequence.
struct Chunk {
    std::string chunk_id;
    std::string doc_id;
    std::size_t token_start = 0;
    std::size_t token_end = 0;
    std::string text;

    bool operator==(const Chunk&) const = default;
};

struct SkippedLine {
    std::size_t line_number = 0;  // 1-based
    std::string reason;
};

struct ParseResult {
    std::vector<RawRecord> records;
    std::vector<SkippedLine> skipped;
};

struct DropReport {
    std::size_t input = 0;
    std::size_t deduped = 0;  // records remaining after deduplication
    std::size_t dropped_no_abstract = 0;
    std::size_t dropped_no_body = 0;
    std::size_t dropped_abstract_len = 0;
    std::size_t dropped_body_len = 0;
    std::size_t kept = 0;

    bool operator==(const DropReport&) const = default;
};

struct FilterLimits {
    std::size_t max_abstract_tokens = defaults::kMaxAbstractTokens;
    std::size_t max_body_paragraphs = defaults::kMaxBodyParagraphs;
};

struct FilterResult {
    std::vector<Document> documents;
    DropReport report;
};

/// Reads line-delimited JSON records. Blank lines are ignored; malformed lines
/// and lines with an empty doc_id are skipped and reported.
ParseResult parse_corpus(std::istream& in);

void write_record(std::ostream& out, const RawRecord& record);
void write_document(std::ostream& out, const Document& doc);

/// Total tokens of abstract plus body under the shared tokenizer.
std::size_t record_token_count(const RawRecord& record);

/// Keeps one record per doc_id: the one with the most tokens, earliest on
/// ties. Output follows the order in which each doc_id first appeared.
std::vector<RawRecord> deduplicate(const std::vector<RawRecord>& records);

/// Applies presence checks then size limits. `report.input` and
/// `report.deduped` are both set to records.size(); callers that ran
/// deduplication overwrite `input` with the pre-dedup count.
FilterResult filter_documents(const std::vector<RawRecord>& records, const FilterLimits& limits = {});

Document make_document(const RawRecord& record);

/// Body text the chunker operates on: paragraphs joined by a blank line.
std::string body_text(const Document& doc);

std::string make_chunk_id(const std::string& doc_id, std::size_t ordinal);

/// Sliding window over body tokens. A trailing window that would be fully
/// contained in the previous chunk is not emitted.
std::vector<Chunk> chunk_body(const Document& doc, std::size_t window = defaults::kChunkWindow,
                              std::size_t overlap = defaults::kChunkOverlap);

/// Token ranges produced by chunk_body for a body of the given length.
std::vector<std::pair<std::size_t, std::size_t>> chunk_spans(std::size_t body_len, std::size_t window,
                                                             std::size_t overlap);

/// Documents plus the doc_id -> chunks lookup.
class Corpus {
public:
    Corpus() = default;
    Corpus(std::vector<Document> documents, std::vector<Chunk> chunks);

    const std::vector<Document>& documents() const noexcept { return documents_; }
    std::size_t size() const noexcept { return documents_.size(); }

    const Document* find(const std::string& doc_id) const;
    const std::vector<Chunk>& chunks_of(const std::string& doc_id) const;
    std::size_t chunk_count() const noexcept;
    std::vector<Chunk> all_chunks() const;

private:
    std::vector<Document> documents_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::map<std::string, std::vector<Chunk>> chunks_;
};

struct IngestResult {
    Corpus corpus;
    DropReport report;
    std::vector<SkippedLine> skipped;
};

/// parse -> deduplicate -> filter -> chunk.
IngestResult ingest(std::istream& in, const FilterLimits& limits = {}, std::size_t window = defaults::kChunkWindow,
                    std::size_t overlap = defaults::kChunkOverlap);

}  // namespace medlit
