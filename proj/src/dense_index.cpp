#include "medlit/dense_index.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_set>

#include <zlib.h>

#include "json.hpp"
#include "medlit/error.hpp"
#include "medlit/simd/kernels.hpp"
#include "medlit/text.hpp"

namespace medlit {

static_assert(std::endian::native == std::endian::little, "vector file is little-endian float32");

HashedEmbedder::HashedEmbedder(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw InvalidParameter("embedding dimension must be positive");
}

std::string HashedEmbedder::provider_id() const {
    return "hashed-bow-fnv1a/" + std::to_string(dimension_);
}

EmbeddingVector HashedEmbedder::embed(std::string_view text) const {
    EmbeddingVector v(dimension_, 0.0);
    for (const auto& tok : tokenize(text)) v[fnv1a64(tok) % dimension_] += 1.0;
    const double norm = std::sqrt(simd::active().sum_squares_f64(v.data(), v.size()));
    if (norm > 0.0) {
        for (double& x : v) x /= norm;
    }
    return v;
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.size() != v.size()) throw InvalidInput("cosine: dimension mismatch");
    const auto& k = simd::active();
    const double nu = k.sum_squares_f64(u.data(), u.size());
    const double nv = k.sum_squares_f64(v.data(), v.size());
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return k.dot_f64(u.data(), v.data(), u.size()) / (std::sqrt(nu) * std::sqrt(nv));
}

DenseStore::DenseStore(std::size_t dimension, std::string provider_id)
    : dimension_(dimension), provider_id_(std::move(provider_id)) {
    if (dimension == 0) throw InvalidParameter("store dimension must be positive");
}

void DenseStore::add(std::string doc_id, const EmbeddingVector& vec) {
    if (vec.size() != dimension_) {
        throw InvalidInput("embedding for " + doc_id + " has dimension " + std::to_string(vec.size()) +
                           ", expected " + std::to_string(dimension_));
    }
    for (double x : vec) {
        if (!std::isfinite(x)) throw InvalidInput("non-finite embedding value for " + doc_id);
    }
    if (!id_set_.insert(doc_id).second) throw InvalidInput("duplicate doc_id in vector store: " + doc_id);
    const std::size_t offset = matrix_.size();
    matrix_.resize(offset + dimension_);
    for (std::size_t i = 0; i < dimension_; ++i) matrix_[offset + i] = static_cast<float>(vec[i]);
    row_norms_.push_back(std::sqrt(simd::active().sum_squares_f32(matrix_.data() + offset, dimension_)));
    doc_ids_.push_back(std::move(doc_id));
}

std::vector<ScoredDoc> DenseStore::dense_scores(const EmbeddingVector& query) const {
    if (query.size() != dimension_) throw InvalidInput("query embedding dimension mismatch");
    const auto& k = simd::active();
    const double qnorm = std::sqrt(k.sum_squares_f64(query.data(), query.size()));
    std::vector<ScoredDoc> out;
    out.reserve(doc_ids_.size());
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        double score = 0.0;
        if (qnorm > 0.0 && row_norms_[i] > 0.0) {
            score = k.dot_f64_f32(query.data(), row(i), dimension_) / (qnorm * row_norms_[i]);
        }
        out.push_back({doc_ids_[i], score});
    }
    sort_by_score(out);
    return out;
}

std::string DenseStore::checksum() const {
    const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(matrix_.data()),
                           static_cast<uInt>(matrix_.size() * sizeof(float)));
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
    return buf;
}

void DenseStore::save(const std::filesystem::path& manifest_path, const std::filesystem::path& matrix_path) const {
    const nlohmann::json manifest{{"dimension", dimension_},
                                  {"count", doc_ids_.size()},
                                  {"provider_id", provider_id_},
                                  {"checksum", checksum()},
                                  {"doc_ids", doc_ids_}};
    std::ofstream m(manifest_path);
    m << manifest.dump(2) << '\n';
    std::ofstream f(matrix_path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(matrix_.data()),
            static_cast<std::streamsize>(matrix_.size() * sizeof(float)));
    if (!m || !f) throw Error("failed writing vector store to " + matrix_path.string());
}

DenseStore DenseStore::load(const std::filesystem::path& manifest_path, const std::filesystem::path& matrix_path) {
    std::ifstream m(manifest_path);
    if (!m) throw NotFound("vector manifest not found: " + manifest_path.string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(m);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptArtifact(std::string("vector manifest unreadable: ") + e.what());
    }
    std::size_t dim = 0, count = 0;
    std::string provider, expected_crc;
    std::vector<std::string> ids;
    try {
        dim = manifest.at("dimension").get<std::size_t>();
        count = manifest.at("count").get<std::size_t>();
        provider = manifest.at("provider_id").get<std::string>();
        expected_crc = manifest.at("checksum").get<std::string>();
        ids = manifest.at("doc_ids").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw CorruptArtifact(std::string("vector manifest incomplete: ") + e.what());
    }
    if (dim == 0 || ids.size() != count) throw CorruptArtifact("vector manifest inconsistent");

    std::ifstream f(matrix_path, std::ios::binary | std::ios::ate);
    if (!f) throw NotFound("vector matrix not found: " + matrix_path.string());
    const auto bytes = static_cast<std::size_t>(f.tellg());
    if (bytes != dim * count * sizeof(float)) throw CorruptArtifact("vector matrix size does not match manifest");
    f.seekg(0);

    DenseStore store(dim, provider);
    store.matrix_.resize(dim * count);
    f.read(reinterpret_cast<char*>(store.matrix_.data()), static_cast<std::streamsize>(bytes));
    if (!f) throw CorruptArtifact("vector matrix truncated");
    if (store.checksum() != expected_crc) throw CorruptArtifact("vector matrix checksum mismatch");

    std::unordered_set<std::string> seen;
    for (auto& id : ids) {
        if (!seen.insert(id).second) throw CorruptArtifact("duplicate doc_id in vector manifest: " + id);
    }
    store.doc_ids_ = std::move(ids);
    const auto& k = simd::active();
    for (std::size_t i = 0; i < count; ++i) {
        const float* r = store.row(i);
        for (std::size_t j = 0; j < dim; ++j) {
            if (!std::isfinite(r[j])) throw CorruptArtifact("non-finite value in vector matrix");
        }
        store.row_norms_.push_back(std::sqrt(k.sum_squares_f32(r, dim)));
    }
    return store;
}

bool DenseStore::operator==(const DenseStore& other) const {
    return dimension_ == other.dimension_ && provider_id_ == other.provider_id_ && doc_ids_ == other.doc_ids_ &&
           matrix_ == other.matrix_;
}

DenseStore build_store(const std::vector<Document>& docs, const EmbeddingProvider& provider) {
    if (provider.dimension() == 0) throw InvalidParameter("provider dimension must be positive");
    DenseStore store(provider.dimension(), provider.provider_id());
    for (const auto& doc : docs) {
        EmbeddingVector v;
        try {
            v = provider.embed(doc.abstract_text);
        } catch (const std::exception& e) {
            throw ProviderError("embedding failed for doc " + doc.doc_id + ": " + e.what());
        }
        store.add(doc.doc_id, v);
    }
    return store;
}

}  // namespace medlit
