#include "medlit/sparse_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <iterator>
#include <map>
#include <unordered_set>

#include <zlib.h>

#include "medlit/error.hpp"

namespace medlit {
namespace {

static_assert(std::endian::native == std::endian::little, "index serializer assumes a little-endian host");

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    void u32(std::uint32_t v) { bytes(&v, sizeof v); }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) { bytes(&v, sizeof v); }
    void varint(std::uint64_t v) {
        while (v >= 0x80) {
            buf_.push_back(static_cast<char>((v & 0x7f) | 0x80));
            v >>= 7;
        }
        buf_.push_back(static_cast<char>(v));
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    const std::vector<char>& data() const { return buf_; }

private:
    std::vector<char> buf_;
};

class Reader {
public:
    Reader(const char* data, std::size_t size) : p_(data), end_(data + size) {}

    void bytes(void* out, std::size_t n) {
        if (static_cast<std::size_t>(end_ - p_) < n) throw CorruptArtifact("index stream truncated");
        std::memcpy(out, p_, n);
        p_ += n;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, sizeof v);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, sizeof v);
        return v;
    }
    std::uint64_t varint() {
        std::uint64_t v = 0;
        for (int shift = 0; shift < 64; shift += 7) {
            if (p_ == end_) throw CorruptArtifact("index stream truncated");
            const auto c = static_cast<unsigned char>(*p_++);
            v |= static_cast<std::uint64_t>(c & 0x7f) << shift;
            if (!(c & 0x80)) return v;
        }
        throw CorruptArtifact("varint overflow in index stream");
    }
    std::string str() {
        const std::uint32_t n = u32();
        if (static_cast<std::size_t>(end_ - p_) < n) throw CorruptArtifact("index stream truncated");
        std::string s(p_, n);
        p_ += n;
        return s;
    }
    bool at_end() const { return p_ == end_; }

private:
    const char* p_;
    const char* end_;
};

std::uint32_t checksum(const char* data, std::size_t n) {
    return static_cast<std::uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

}  // namespace

void sort_by_score(std::vector<ScoredDoc>& scored) {
    std::sort(scored.begin(), scored.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
}

InvertedIndex InvertedIndex::build(const std::vector<TokenizedDoc>& docs, Bm25Params params) {
    if (!(params.k1 >= 0.0) || !(params.b >= 0.0 && params.b <= 1.0)) {
        throw InvalidParameter("BM25 parameters out of range (k1 >= 0, 0 <= b <= 1)");
    }
    InvertedIndex idx;
    idx.params_ = params;
    std::unordered_set<std::string> seen;
    for (std::uint32_t ord = 0; ord < docs.size(); ++ord) {
        const auto& doc = docs[ord];
        if (!seen.insert(doc.doc_id).second) throw InvalidInput("duplicate doc_id in index input: " + doc.doc_id);
        idx.doc_ids_.push_back(doc.doc_id);
        idx.doc_lengths_.push_back(static_cast<std::uint32_t>(doc.tokens.size()));

        std::map<std::string_view, std::uint32_t> tf;
        for (const auto& t : doc.tokens) ++tf[t];
        for (const auto& [term, freq] : tf) idx.terms_[std::string(term)].push_back(Posting{ord, freq});
    }
    idx.finalize();
    return idx;
}

void InvertedIndex::finalize() {
    double total = 0.0;
    for (auto len : doc_lengths_) total += len;
    // Zero only for the degenerate term-less index, where no posting ever divides by it.
    avg_doc_length_ = total / static_cast<double>(doc_lengths_.size());
}

InvertedIndex build_index(const std::vector<Document>& docs, Bm25Params params) {
    std::vector<TokenizedDoc> input;
    input.reserve(docs.size());
    for (const auto& d : docs) input.push_back({d.doc_id, d.abstract_tokens});
    return InvertedIndex::build(input, params);
}

double InvertedIndex::idf(std::uint32_t df) const noexcept {
    const double n = static_cast<double>(doc_ids_.size());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

const std::vector<Posting>* InvertedIndex::postings(const std::string& term) const {
    auto it = terms_.find(term);
    return it == terms_.end() ? nullptr : &it->second;
}

std::vector<ScoredDoc> InvertedIndex::bm25_scores(const std::vector<std::string>& query_tokens) const {
    std::vector<double> acc(doc_ids_.size(), 0.0);
    std::vector<std::uint32_t> touched;
    std::vector<char> hit(doc_ids_.size(), 0);
    const double k1 = params_.k1;
    const double b = params_.b;

    for (const auto& token : query_tokens) {
        const auto* list = postings(token);
        if (!list) continue;
        const double w = idf(static_cast<std::uint32_t>(list->size()));
        for (const auto& p : *list) {
            const double tf = p.term_frequency;
            const double norm = k1 * (1.0 - b + b * doc_lengths_[p.doc_ordinal] / avg_doc_length_);
            acc[p.doc_ordinal] += w * tf * (k1 + 1.0) / (tf + norm);
            if (!hit[p.doc_ordinal]) {
                hit[p.doc_ordinal] = 1;
                touched.push_back(p.doc_ordinal);
            }
        }
    }

    std::vector<ScoredDoc> out;
    out.reserve(touched.size());
    for (auto ord : touched) out.push_back({doc_ids_[ord], acc[ord]});
    sort_by_score(out);
    return out;
}

std::vector<std::string> InvertedIndex::sorted_terms() const {
    std::vector<std::string> terms;
    terms.reserve(terms_.size());
    for (const auto& [t, _] : terms_) terms.push_back(t);
    std::sort(terms.begin(), terms.end());
    return terms;
}

void InvertedIndex::save(std::ostream& out) const {
    Writer w;
    w.bytes(kIndexMagic, sizeof kIndexMagic);
    w.u32(kIndexFormatVersion);
    w.f64(params_.k1);
    w.f64(params_.b);
    w.u64(doc_ids_.size());
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        w.str(doc_ids_[i]);
        w.u32(doc_lengths_[i]);
    }
    const auto terms = sorted_terms();
    w.u64(terms.size());
    for (const auto& t : terms) {
        const auto& list = terms_.at(t);
        w.str(t);
        w.varint(list.size());
        std::uint32_t prev = 0;
        for (const auto& p : list) {
            w.varint(p.doc_ordinal - prev);
            w.varint(p.term_frequency);
            prev = p.doc_ordinal;
        }
    }
    const auto& data = w.data();
    const std::uint32_t crc = checksum(data.data(), data.size());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.write(reinterpret_cast<const char*>(&crc), sizeof crc);
    if (!out) throw Error("failed writing index stream");
}

InvertedIndex InvertedIndex::load(std::istream& in) {
    const std::vector<char> raw{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (raw.size() < sizeof kIndexMagic + sizeof(std::uint32_t) * 2) throw CorruptArtifact("index stream truncated");
    if (std::memcmp(raw.data(), kIndexMagic, sizeof kIndexMagic) != 0) throw CorruptArtifact("bad index magic");

    Reader header(raw.data() + sizeof kIndexMagic, raw.size() - sizeof kIndexMagic);
    if (const auto version = header.u32(); version != kIndexFormatVersion) {
        throw CorruptArtifact("unsupported index format version " + std::to_string(version));
    }
    const std::size_t body_size = raw.size() - sizeof(std::uint32_t);
    std::uint32_t stored_crc;
    std::memcpy(&stored_crc, raw.data() + body_size, sizeof stored_crc);
    if (checksum(raw.data(), body_size) != stored_crc) throw CorruptArtifact("index checksum mismatch");

    Reader r(raw.data() + sizeof kIndexMagic + sizeof(std::uint32_t),
             body_size - sizeof kIndexMagic - sizeof(std::uint32_t));
    InvertedIndex idx;
    idx.params_.k1 = r.f64();
    idx.params_.b = r.f64();
    const std::uint64_t n_docs = r.u64();
    if (n_docs > body_size) throw CorruptArtifact("implausible document count");
    idx.doc_ids_.reserve(n_docs);
    idx.doc_lengths_.reserve(n_docs);
    for (std::uint64_t i = 0; i < n_docs; ++i) {
        idx.doc_ids_.push_back(r.str());
        idx.doc_lengths_.push_back(r.u32());
    }
    const std::uint64_t n_terms = r.u64();
    if (n_terms > body_size) throw CorruptArtifact("implausible term count");
    for (std::uint64_t t = 0; t < n_terms; ++t) {
        std::string term = r.str();
        const std::uint64_t n_post = r.varint();
        if (n_post == 0 || n_post > n_docs) throw CorruptArtifact("bad posting list length for term " + term);
        std::vector<Posting> list;
        list.reserve(n_post);
        std::uint64_t ord = 0;
        for (std::uint64_t i = 0; i < n_post; ++i) {
            const std::uint64_t delta = r.varint();
            if (i > 0 && delta == 0) throw CorruptArtifact("posting list not strictly increasing");
            ord += delta;
            const std::uint64_t tf = r.varint();
            if (ord >= n_docs || tf == 0 || tf > UINT32_MAX) throw CorruptArtifact("posting out of range");
            list.push_back(Posting{static_cast<std::uint32_t>(ord), static_cast<std::uint32_t>(tf)});
        }
        if (!idx.terms_.emplace(std::move(term), std::move(list)).second) {
            throw CorruptArtifact("duplicate term in index stream");
        }
    }
    if (!r.at_end()) throw CorruptArtifact("trailing bytes in index stream");
    idx.finalize();
    return idx;
}

bool InvertedIndex::operator==(const InvertedIndex& other) const {
    return params_ == other.params_ && doc_ids_ == other.doc_ids_ && doc_lengths_ == other.doc_lengths_ &&
           terms_ == other.terms_;
}

}  // namespace medlit
