#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include <fstream>
#include <functional>
#include <memory>

#include "medlit/answer.hpp"
#include "medlit/dense_index.hpp"
#include "medlit/dialogue.hpp"
#include "medlit/error.hpp"

namespace fixture {

/// Embeds by exact lookup; unknown text maps to `fallback`.
class TableEmbedder final : public medlit::EmbeddingProvider {
public:
    TableEmbedder(std::size_t dim, std::map<std::string, medlit::EmbeddingVector> table,
                  medlit::EmbeddingVector fallback = {})
        : dim_(dim), table_(std::move(table)), fallback_(fallback.empty() ? medlit::EmbeddingVector(dim, 0.0) : fallback) {}

    medlit::EmbeddingVector embed(std::string_view text) const override {
        auto it = table_.find(std::string(text));
        return it == table_.end() ? fallback_ : it->second;
    }
    std::size_t dimension() const noexcept override { return dim_; }
    std::string provider_id() const override { return "table/" + std::to_string(dim_); }

private:
    std::size_t dim_;
    std::map<std::string, medlit::EmbeddingVector> table_;
    medlit::EmbeddingVector fallback_;
};

class FailingEmbedder final : public medlit::EmbeddingProvider {
public:
    explicit FailingEmbedder(std::size_t dim) : dim_(dim) {}
    medlit::EmbeddingVector embed(std::string_view) const override { throw medlit::ProviderError("embedder down"); }
    std::size_t dimension() const noexcept override { return dim_; }
    std::string provider_id() const override { return "failing"; }

private:
    std::size_t dim_;
};

/// Extractor driven by a callback, for scripting spans per passage.
class ScriptedExtractor final : public medlit::SpanExtractor {
public:
    using Fn = std::function<std::vector<medlit::ExtractedSpan>(std::string_view, std::string_view)>;
    explicit ScriptedExtractor(Fn fn) : fn_(std::move(fn)) {}
    std::vector<medlit::ExtractedSpan> extract(std::string_view q, std::string_view passage) const override {
        return fn_(q, passage);
    }

private:
    Fn fn_;
};

#ifdef MEDLIT_TEST_DATA
inline std::string data_path(const std::string& name) { return std::string(MEDLIT_TEST_DATA) + "/" + name; }

/// The 20-document coronavirus corpus, indexed with the built-in providers.
inline std::shared_ptr<const medlit::Artifacts> covid20(std::size_t dim = 768) {
    std::ifstream in(data_path("covid20.jsonl"));
    if (!in) throw std::runtime_error("missing fixture covid20.jsonl");
    auto ingested = medlit::ingest(in);
    auto index = medlit::build_index(ingested.corpus.documents());
    auto store = medlit::build_store(ingested.corpus.documents(), medlit::HashedEmbedder(dim));
    return std::make_shared<const medlit::Artifacts>(
        medlit::Artifacts{std::move(ingested.corpus), std::move(index), std::move(store)});
}
#endif

}  // namespace fixture
