#include "medlit/remote.hpp"

#include <cmath>

#include "httplib.h"
#include "medlit/defaults.hpp"
#include "medlit/error.hpp"

namespace medlit {

JsonEndpoint::JsonEndpoint(std::string base_url, std::chrono::milliseconds timeout)
    : url_(std::move(base_url)), timeout_(timeout) {
    const auto scheme_end = url_.find("://");
    if (scheme_end == std::string::npos) throw InvalidParameter("endpoint URL needs a scheme: " + url_);
    const auto path_start = url_.find('/', scheme_end + 3);
    scheme_host_port_ = url_.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? std::string{} : url_.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
}

nlohmann::json JsonEndpoint::post(std::string_view path, const nlohmann::json& body) const {
    httplib::Client client(scheme_host_port_);
    const auto secs = static_cast<time_t>(timeout_.count() / 1000);
    const auto usecs = static_cast<time_t>((timeout_.count() % 1000) * 1000);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    const std::string full = prefix_ + std::string(path);
    auto res = client.Post(full, body.dump(), "application/json");
    if (!res) throw ProviderError("request to " + url_ + full + " failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) {
        throw ProviderError("request to " + url_ + full + " returned HTTP " + std::to_string(res->status));
    }
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
        throw ProviderError("response from " + url_ + full + " is not JSON: " + e.what());
    }
}

RemoteEmbedder::RemoteEmbedder(std::string base_url, std::size_t dimension, std::chrono::milliseconds timeout)
    : endpoint_(std::move(base_url), timeout), dimension_(dimension) {
    if (dimension == 0) throw InvalidParameter("remote embedder dimension must be positive");
}

EmbeddingVector RemoteEmbedder::embed(std::string_view text) const {
    const auto j = endpoint_.post("/embed", {{"text", std::string(text)}});
    EmbeddingVector v;
    try {
        v = j.at("vector").get<EmbeddingVector>();
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("embedder response missing numeric 'vector': ") + e.what());
    }
    if (v.size() != dimension_) {
        throw ProviderError("embedder returned dimension " + std::to_string(v.size()) + ", expected " +
                            std::to_string(dimension_));
    }
    for (double x : v) {
        if (!std::isfinite(x)) throw ProviderError("embedder returned a non-finite value");
    }
    return v;
}

RemoteExtractor::RemoteExtractor(std::string base_url, std::chrono::milliseconds timeout)
    : endpoint_(std::move(base_url), timeout) {}

std::vector<ExtractedSpan> RemoteExtractor::extract(std::string_view question, std::string_view passage) const {
    const auto j = endpoint_.post("/extract", {{"question", std::string(question)}, {"passage", std::string(passage)}});
    const auto& list = j.is_object() && j.contains("spans") ? j.at("spans") : j;
    if (!list.is_array()) throw ProviderError("extractor response is not a list of spans");
    std::vector<ExtractedSpan> out;
    try {
        for (const auto& s : list) {
            ExtractedSpan span{s.at("text").get<std::string>(), s.at("start_loglik").get<double>(),
                               s.at("end_loglik").get<double>()};
            if (!std::isfinite(span.start_loglik) || !std::isfinite(span.end_loglik)) {
                throw ProviderError("extractor returned a non-finite log-likelihood");
            }
            out.push_back(std::move(span));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("malformed span in extractor response: ") + e.what());
    }
    return out;
}

RemoteClassifier::RemoteClassifier(std::string base_url, std::chrono::milliseconds timeout)
    : endpoint_(std::move(base_url), timeout) {}

Classification RemoteClassifier::classify(std::string_view text) const {
    const auto j = endpoint_.post("/classify", {{"text", std::string(text)}});
    try {
        if (j.contains("confidence")) {
            const double conf = j.at("confidence").get<double>();
            if (!std::isfinite(conf) || conf < 0.0 || conf > 1.0) throw ProviderError("classifier confidence outside [0, 1]");
            return Classification{conf >= defaults::kClassifierCutoff, conf, std::nullopt};
        }
        const bool covid = j.at("is_covid").get<bool>();
        return Classification{covid, covid ? 1.0 : 0.0, std::nullopt};
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("malformed classifier response: ") + e.what());
    }
}

RemoteGenerator::RemoteGenerator(std::string base_url, std::chrono::milliseconds timeout)
    : endpoint_(std::move(base_url), timeout) {}

std::string RemoteGenerator::generate(const std::vector<Turn>& history) const {
    auto h = nlohmann::json::array();
    for (const auto& t : history) h.push_back({{"speaker", t.speaker == Speaker::user ? "user" : "bot"}, {"text", t.text}});
    const auto j = endpoint_.post("/generate", {{"history", h}});
    std::string text;
    try {
        text = j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("malformed generator response: ") + e.what());
    }
    if (text.empty()) throw ProviderError("generator returned an empty reply");
    return text;
}

}  // namespace medlit
