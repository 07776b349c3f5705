#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "medlit/answer.hpp"
#include "medlit/dense_index.hpp"
#include "medlit/dialogue.hpp"
#include "medlit/nlu.hpp"

// HTTP clients for externally hosted models. All speak JSON over POST and
// raise ProviderError on transport failures, non-2xx status or bad payloads.
namespace medlit {

/// Base URL such as "http://localhost:9000" or "http://host:9000/models".
class JsonEndpoint {
public:
    JsonEndpoint(std::string base_url, std::chrono::milliseconds timeout);

    nlohmann::json post(std::string_view path, const nlohmann::json& body) const;
    const std::string& url() const noexcept { return url_; }

private:
    std::string url_;
    std::string scheme_host_port_;
    std::string prefix_;
    std::chrono::milliseconds timeout_;
};

/// POST /embed {"text"} -> {"vector": [...]}; the vector length must equal `dimension`.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    RemoteEmbedder(std::string base_url, std::size_t dimension, std::chrono::milliseconds timeout);
    EmbeddingVector embed(std::string_view text) const override;
    std::size_t dimension() const noexcept override { return dimension_; }
    std::string provider_id() const override { return "remote:" + endpoint_.url(); }

private:
    JsonEndpoint endpoint_;
    std::size_t dimension_;
};

/// POST /extract {"question", "passage"} -> [{"text", "start_loglik", "end_loglik"}, ...]
class RemoteExtractor final : public SpanExtractor {
public:
    RemoteExtractor(std::string base_url, std::chrono::milliseconds timeout);
    std::vector<ExtractedSpan> extract(std::string_view question, std::string_view passage) const override;

private:
    JsonEndpoint endpoint_;
};

/// POST /classify {"text"} -> {"is_covid", "confidence"}; covid iff confidence >= 0.5.
class RemoteClassifier final : public CovidClassifier {
public:
    RemoteClassifier(std::string base_url, std::chrono::milliseconds timeout);
    Classification classify(std::string_view text) const override;

private:
    JsonEndpoint endpoint_;
};

/// POST /generate {"history": [{"speaker", "text"}, ...]} -> {"text"}
class RemoteGenerator final : public Generator {
public:
    RemoteGenerator(std::string base_url, std::chrono::milliseconds timeout);
    std::string generate(const std::vector<Turn>& history) const override;

private:
    JsonEndpoint endpoint_;
};

}  // namespace medlit
