#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "medlit/corpus.hpp"
#include "medlit/defaults.hpp"
#include "medlit/sparse_index.hpp"

namespace medlit {

using EmbeddingVector = std::vector<double>;

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    /// Must be deterministic for identical text. Throws ProviderError on failure.
    virtual EmbeddingVector embed(std::string_view text) const = 0;
    virtual std::size_t dimension() const noexcept = 0;
    virtual std::string provider_id() const = 0;
};

/// Hashed bag-of-tokens: each token lands in bucket fnv1a64(token) % dim,
/// counts are accumulated and the result L2-normalized.
class HashedEmbedder final : public EmbeddingProvider {
public:
    explicit HashedEmbedder(std::size_t dimension = defaults::kEmbeddingDimension);

    EmbeddingVector embed(std::string_view text) const override;
    std::size_t dimension() const noexcept override { return dimension_; }
    std::string provider_id() const override;

private:
    std::size_t dimension_;
};

/// dot(u, v) / (|u| |v|), or 0 when either norm is zero.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

/// Row-major doc_count x dimension matrix of abstract embeddings, stored as float32.
class DenseStore {
public:
    DenseStore(std::size_t dimension, std::string provider_id);

    void add(std::string doc_id, const EmbeddingVector& vec);

    std::vector<ScoredDoc> dense_scores(const EmbeddingVector& query) const;

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return doc_ids_.size(); }
    const std::string& provider_id() const noexcept { return provider_id_; }
    const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
    const std::vector<float>& matrix() const noexcept { return matrix_; }
    const float* row(std::size_t i) const noexcept { return matrix_.data() + i * dimension_; }

    /// CRC-32 of the little-endian matrix bytes, as 8 lowercase hex digits.
    std::string checksum() const;

    /// Writes <stem>.manifest.json and <stem>.f32.
    void save(const std::filesystem::path& manifest_path, const std::filesystem::path& matrix_path) const;
    static DenseStore load(const std::filesystem::path& manifest_path, const std::filesystem::path& matrix_path);

    bool operator==(const DenseStore& other) const;

private:
    std::size_t dimension_;
    std::string provider_id_;
    std::vector<std::string> doc_ids_;
    std::vector<float> matrix_;
    std::vector<double> row_norms_;
    std::unordered_set<std::string> id_set_;
};

/// Embeds every abstract. A provider failure aborts with the failing doc_id in the message.
DenseStore build_store(const std::vector<Document>& docs, const EmbeddingProvider& provider);

}  // namespace medlit
