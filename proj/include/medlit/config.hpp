#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "json.hpp"
#include "medlit/answer.hpp"
#include "medlit/defaults.hpp"
#include "medlit/fusion.hpp"
#include "medlit/sparse_index.hpp"

namespace medlit {

struct ProviderEndpoints {
    std::string embedder;  // empty: built-in provider
    std::string extractor;
    std::string classifier;
    std::string generator;
    std::int64_t timeout_ms = 5000;
};

struct AppConfig {
    std::string artifacts_dir = "artifacts";
    std::string corpus_path;
    FusionConfig fusion;
    double alpha = defaults::kAnswerAlpha;
    std::size_t max_answers = defaults::kMaxAnswers;
    std::size_t max_span_tokens = defaults::kMaxSpanTokens;
    std::size_t chunk_window = defaults::kChunkWindow;
    std::size_t chunk_overlap = defaults::kChunkOverlap;
    std::size_t max_abstract_tokens = defaults::kMaxAbstractTokens;
    std::size_t max_body_paragraphs = defaults::kMaxBodyParagraphs;
    Bm25Params bm25;
    std::size_t embedding_dimension = defaults::kEmbeddingDimension;
    ProviderEndpoints providers;
    std::string dictionary_path;
    std::int64_t session_ttl_seconds = 1800;
    std::string session_snapshot;
    std::string host = "127.0.0.1";
    int port = 8080;
    bool debug = false;

    /// Throws InvalidParameter on out-of-range values.
    void validate() const;
};

nlohmann::json config_to_json(const AppConfig& cfg);
/// Keys absent from `j` keep their defaults; unknown keys are an error.
AppConfig config_from_json(const nlohmann::json& j);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> process_env(const std::string& name);

/// Name of the environment variable overriding a dotted config key,
/// e.g. "fusion.bm25_threshold" -> "MEDLIT_FUSION_BM25_THRESHOLD".
std::string env_var_for(const std::string& dotted_key);

/// Defaults, then the file (if given), then environment overrides.
AppConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env = process_env);

/// Sets one dotted key from its string form, with the same parsing as the environment.
void set_config_value(AppConfig& cfg, const std::string& dotted_key, const std::string& value);

}  // namespace medlit
