#include "medlit/service.hpp"

#include <chrono>

#include "httplib.h"
#include "medlit/error.hpp"
#include "medlit/simd/kernels.hpp"
#include "medlit/text.hpp"

namespace medlit {
namespace {

using nlohmann::json;

struct HttpError {
    int status;
    std::string message;
};

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
    json body;
    try {
        body = json::parse(req.body);
    } catch (const json::parse_error&) {
        throw HttpError{400, "request body is not valid JSON"};
    }
    if (!body.is_object()) throw HttpError{400, "request body must be a JSON object"};
    return body;
}

std::string required_string(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || !it->is_string()) throw HttpError{400, std::string("missing string field '") + key + "'"};
    const std::string value = trim(it->get<std::string>());
    if (value.empty()) throw HttpError{400, std::string("field '") + key + "' is empty"};
    return value;
}

bool flag(const json& body, const char* key, bool fallback) {
    auto it = body.find(key);
    if (it == body.end()) return fallback;
    if (!it->is_boolean()) throw HttpError{400, std::string("field '") + key + "' must be a boolean"};
    return it->get<bool>();
}

double parse_double(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw HttpError{400, "parameter '" + key + "' must be a number"};
    }
}

std::size_t parse_positive(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used != text.size() || v < 1) throw std::invalid_argument("range");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw HttpError{400, "parameter '" + key + "' must be a positive integer"};
    }
}

/// Applies request-level overrides, given as strings, onto a fusion config.
FusionConfig with_overrides(FusionConfig cfg, const std::function<std::optional<std::string>(const char*)>& get) {
    if (auto v = get("bm25_threshold")) cfg.bm25_threshold = parse_double("bm25_threshold", *v);
    if (auto v = get("cosine_threshold")) cfg.cosine_threshold = parse_double("cosine_threshold", *v);
    if (auto v = get("top_k")) cfg.top_k = parse_positive("top_k", *v);
    if (auto v = get("k")) cfg.top_k = parse_positive("k", *v);
    if (auto v = get("strategy")) {
        try {
            cfg.strategy = parse_strategy(*v);
        } catch (const InvalidParameter& e) {
            throw HttpError{400, e.what()};
        }
    }
    try {
        cfg.validate();
    } catch (const InvalidParameter& e) {
        throw HttpError{400, e.what()};
    }
    return cfg;
}

void log_stages(const SystemResponse& r, json& extra) {
    extra["kind"] = std::string(kind_name(r.kind));
    if (auto it = r.diagnostics.find("route"); it != r.diagnostics.end()) extra["route"] = *it;
    if (auto it = r.diagnostics.find("timings_ms"); it != r.diagnostics.end()) extra["stages_ms"] = *it;
}

}  // namespace

Service::Service(std::shared_ptr<const ConversationEngine> engine, std::shared_ptr<SessionStore> sessions,
                 ServiceOptions options)
    : engine_(std::move(engine)), sessions_(std::move(sessions)), options_(std::move(options)) {
    if (!sessions_) throw InvalidInput("service requires a session store");
}

void Service::mount(httplib::Server& server) const {
    auto self = std::make_shared<const Service>(*this);
    using Handler = std::function<json(const httplib::Request&, int&, json&)>;
    auto wrap = [self](bool needs_engine, Handler handler) {
        return [self, needs_engine, handler](const httplib::Request& req, httplib::Response& res) {
            const auto t0 = std::chrono::steady_clock::now();
            int status = 200;
            json body;
            json extra = json::object();
            try {
                if (needs_engine && !self->engine_) throw HttpError{503, "artifacts not loaded"};
                body = handler(req, status, extra);
            } catch (const HttpError& e) {
                status = e.status;
                body = {{"error", e.message}};
            } catch (const NotFound& e) {
                status = 404;
                body = {{"error", e.what()}};
            } catch (const InvalidInput& e) {
                status = 400;
                body = {{"error", e.what()}};
            } catch (const InvalidParameter& e) {
                status = 400;
                body = {{"error", e.what()}};
            } catch (const std::exception& e) {
                status = 500;
                body = {{"error", e.what()}};
            }
            send_json(res, status, body);
            if (self->options_.log) {
                const double ms =
                    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
                json record{{"method", req.method}, {"path", req.path}, {"status", status}, {"ms", ms}};
                record.update(extra);
                self->options_.log(record);
            }
        };
    };

    server.Post("/v1/chat", wrap(true, [self](const httplib::Request& req, int&, json& extra) {
        const json body = parse_body(req);
        const std::string text = required_string(body, "text");
        const bool debug = flag(body, "debug", self->options_.debug);
        std::string id;
        if (auto it = body.find("session_id"); it != body.end() && !it->is_null()) {
            if (!it->is_string()) throw HttpError{400, "session_id must be a string"};
            id = it->get<std::string>();
        } else {
            id = self->sessions_->create();
        }
        const auto now = self->sessions_->now();
        auto outcome = self->sessions_->with_session(id, [&](Session& s) { return self->engine_->handle_turn(s, text, now); });
        log_stages(outcome.response, extra);
        json out = to_json(outcome.response, debug);
        out["session_id"] = id;
        return out;
    }));

    server.Get("/v1/search", wrap(true, [self](const httplib::Request& req, int&, json&) {
        if (!req.has_param("q") || trim(req.get_param_value("q")).empty()) {
            throw HttpError{400, "query parameter 'q' is required"};
        }
        const std::string q = req.get_param_value("q");
        const auto cfg = with_overrides(self->engine_->options().fusion, [&](const char* key) -> std::optional<std::string> {
            if (!req.has_param(key)) return std::nullopt;
            return req.get_param_value(key);
        });
        const auto result = self->engine_->search(q, cfg);
        auto results = json::array();
        for (const auto& c : result.candidates) results.push_back(to_json(c));
        json out{{"query", q},
                 {"strategy", std::string(strategy_name(result.strategy_used))},
                 {"results", results},
                 {"warnings", result.warnings}};
        const bool debug = req.has_param("debug") ? req.get_param_value("debug") == "true" : self->options_.debug;
        if (debug) {
            out["diagnostics"] = {{"pool_size", result.pool_size},
                                  {"sparse", {{"scored", result.sparse.scored}, {"passed", result.sparse.passed}, {"top", result.sparse.top_score}}},
                                  {"dense", {{"scored", result.dense.scored}, {"passed", result.dense.passed}, {"top", result.dense.top_score}}}};
        }
        return out;
    }));

    server.Post("/v1/answer", wrap(true, [self](const httplib::Request& req, int&, json& extra) {
        const json body = parse_body(req);
        const std::string question = required_string(body, "question");
        const bool debug = flag(body, "debug", self->options_.debug);
        const auto cfg = with_overrides(self->engine_->options().fusion, [&](const char* key) -> std::optional<std::string> {
            auto it = body.find(key);
            if (it == body.end() || it->is_null()) return std::nullopt;
            return it->is_string() ? it->get<std::string>() : it->dump();
        });
        const auto response = self->engine_->answer(question, cfg);
        log_stages(response, extra);
        return to_json(response, debug);
    }));

    server.Get("/v1/health", wrap(false, [self](const httplib::Request&, int& status, json&) {
        json out{{"status", self->engine_ ? "ok" : "unavailable"},
                 {"artifacts", self->options_.checksums},
                 {"simd", std::string(simd::isa_name(simd::active().isa))}};
        if (self->engine_) {
            out["documents"] = self->engine_->artifacts().corpus.size();
            out["chunks"] = self->engine_->artifacts().corpus.chunk_count();
        } else {
            status = 503;
        }
        return out;
    }));
}

}  // namespace medlit
