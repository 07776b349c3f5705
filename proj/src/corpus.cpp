#include "medlit/corpus.hpp"

#include <algorithm>
#include <cstdio>

#include "json.hpp"

#include "medlit/error.hpp"
#include "medlit/text.hpp"

namespace medlit {
namespace {

using nlohmann::json;

std::string optional_string(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return {};
    if (!it->is_string()) throw std::invalid_argument(std::string("field '") + key + "' is not a string");
    return it->get<std::string>();
}

json record_json(const std::string& doc_id, const std::string& source, const std::string& title,
                 const std::string& abstract_text, const std::vector<std::string>& body) {
    return json{{"doc_id", doc_id}, {"source", source}, {"title", title}, {"abstract", abstract_text}, {"body", body}};
}

}  // namespace

ParseResult parse_corpus(std::istream& in) {
    ParseResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const json obj = json::parse(line);
            if (!obj.is_object()) throw std::invalid_argument("line is not an object");
            RawRecord rec;
            rec.doc_id = optional_string(obj, "doc_id");
            if (rec.doc_id.empty()) {
                result.skipped.push_back({line_no, "empty doc_id"});
                continue;
            }
            rec.source = optional_string(obj, "source");
            rec.title = optional_string(obj, "title");
            rec.abstract_text = optional_string(obj, "abstract");
            if (auto it = obj.find("body"); it != obj.end() && !it->is_null()) {
                if (!it->is_array()) throw std::invalid_argument("field 'body' is not an array");
                for (const auto& p : *it) {
                    if (!p.is_string()) throw std::invalid_argument("field 'body' has a non-string paragraph");
                    rec.body_paragraphs.push_back(p.get<std::string>());
                }
            }
            result.records.push_back(std::move(rec));
        } catch (const json::exception& e) {
            result.skipped.push_back({line_no, std::string("malformed json: ") + e.what()});
        } catch (const std::invalid_argument& e) {
            result.skipped.push_back({line_no, e.what()});
        }
    }
    return result;
}

void write_record(std::ostream& out, const RawRecord& r) {
    out << record_json(r.doc_id, r.source, r.title, r.abstract_text, r.body_paragraphs).dump() << '\n';
}

void write_document(std::ostream& out, const Document& d) {
    out << record_json(d.doc_id, d.source, d.title, d.abstract_text, d.body_paragraphs).dump() << '\n';
}

std::size_t record_token_count(const RawRecord& record) {
    std::size_t n = count_tokens(record.abstract_text);
    for (const auto& p : record.body_paragraphs) n += count_tokens(p);
    return n;
}

std::vector<RawRecord> deduplicate(const std::vector<RawRecord>& records) {
    std::vector<std::size_t> winner;  // index into records, per output slot
    std::vector<std::size_t> winner_tokens;
    std::unordered_map<std::string, std::size_t> slot_of;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::size_t tokens = record_token_count(records[i]);
        auto [it, inserted] = slot_of.try_emplace(records[i].doc_id, winner.size());
        if (inserted) {
            winner.push_back(i);
            winner_tokens.push_back(tokens);
        } else if (tokens > winner_tokens[it->second]) {
            winner[it->second] = i;
            winner_tokens[it->second] = tokens;
        }
    }
    std::vector<RawRecord> out;
    out.reserve(winner.size());
    for (std::size_t idx : winner) out.push_back(records[idx]);
    return out;
}

Document make_document(const RawRecord& r) {
    return Document{r.doc_id, r.title, r.abstract_text, tokenize(r.abstract_text), r.body_paragraphs, r.source};
}

FilterResult filter_documents(const std::vector<RawRecord>& records, const FilterLimits& limits) {
    FilterResult result;
    result.report.input = records.size();
    result.report.deduped = records.size();
    for (const auto& r : records) {
        const std::size_t abstract_tokens = count_tokens(r.abstract_text);
        std::size_t body_tokens = 0;
        for (const auto& p : r.body_paragraphs) body_tokens += count_tokens(p);

        if (abstract_tokens == 0) {
            ++result.report.dropped_no_abstract;
        } else if (body_tokens == 0) {
            ++result.report.dropped_no_body;
        } else if (abstract_tokens > limits.max_abstract_tokens) {
            ++result.report.dropped_abstract_len;
        } else if (r.body_paragraphs.size() > limits.max_body_paragraphs) {
            ++result.report.dropped_body_len;
        } else {
            result.documents.push_back(make_document(r));
        }
    }
    result.report.kept = result.documents.size();
    return result;
}

std::string body_text(const Document& doc) {
    return join(doc.body_paragraphs, "\n\n");
}

std::string make_chunk_id(const std::string& doc_id, std::size_t ordinal) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%05zu", ordinal);
    return doc_id + buf;
}

std::vector<std::pair<std::size_t, std::size_t>> chunk_spans(std::size_t body_len, std::size_t window,
                                                             std::size_t overlap) {
    if (window == 0 || overlap >= window) {
        throw InvalidParameter("chunk overlap must be smaller than the window and the window positive");
    }
    const std::size_t step = window - overlap;
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (std::size_t start = 0; start < body_len; start += step) {
        const std::size_t end = std::min(start + window, body_len);
        if (!spans.empty() && end <= spans.back().second) break;
        spans.emplace_back(start, end);
        if (end == body_len) break;
    }
    return spans;
}

std::vector<Chunk> chunk_body(const Document& doc, std::size_t window, std::size_t overlap) {
    const std::string body = body_text(doc);
    const auto tokens = tokenize_with_offsets(body);
    const auto spans = chunk_spans(tokens.size(), window, overlap);
    std::vector<Chunk> chunks;
    chunks.reserve(spans.size());
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const auto [b, e] = spans[i];
        const std::size_t byte_begin = tokens[b].begin;
        const std::size_t byte_end = tokens[e - 1].end;
        chunks.push_back(Chunk{make_chunk_id(doc.doc_id, i), doc.doc_id, b, e,
                               body.substr(byte_begin, byte_end - byte_begin)});
    }
    return chunks;
}

Corpus::Corpus(std::vector<Document> documents, std::vector<Chunk> chunks) : documents_(std::move(documents)) {
    for (std::size_t i = 0; i < documents_.size(); ++i) {
        if (!by_id_.emplace(documents_[i].doc_id, i).second) {
            throw InvalidInput("duplicate doc_id in corpus: " + documents_[i].doc_id);
        }
    }
    for (auto& c : chunks) {
        if (!by_id_.contains(c.doc_id)) throw ConsistencyError("chunk references unknown doc_id: " + c.doc_id);
        chunks_[c.doc_id].push_back(std::move(c));
    }
    for (auto& [id, list] : chunks_) {
        std::stable_sort(list.begin(), list.end(),
                         [](const Chunk& a, const Chunk& b) { return a.token_start < b.token_start; });
    }
}

const Document* Corpus::find(const std::string& doc_id) const {
    auto it = by_id_.find(doc_id);
    return it == by_id_.end() ? nullptr : &documents_[it->second];
}

const std::vector<Chunk>& Corpus::chunks_of(const std::string& doc_id) const {
    static const std::vector<Chunk> kEmpty;
    auto it = chunks_.find(doc_id);
    return it == chunks_.end() ? kEmpty : it->second;
}

std::size_t Corpus::chunk_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [id, list] : chunks_) n += list.size();
    return n;
}

std::vector<Chunk> Corpus::all_chunks() const {
    std::vector<Chunk> out;
    for (const auto& doc : documents_) {
        const auto& list = chunks_of(doc.doc_id);
        out.insert(out.end(), list.begin(), list.end());
    }
    return out;
}

IngestResult ingest(std::istream& in, const FilterLimits& limits, std::size_t window, std::size_t overlap) {
    auto parsed = parse_corpus(in);
    const std::size_t input = parsed.records.size();
    auto unique = deduplicate(parsed.records);
    auto filtered = filter_documents(unique, limits);
    filtered.report.input = input;

    std::vector<Chunk> chunks;
    for (const auto& doc : filtered.documents) {
        auto c = chunk_body(doc, window, overlap);
        chunks.insert(chunks.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
    }
    return IngestResult{Corpus(std::move(filtered.documents), std::move(chunks)), filtered.report,
                        std::move(parsed.skipped)};
}

}  // namespace medlit
