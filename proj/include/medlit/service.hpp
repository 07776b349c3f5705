#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "json.hpp"
#include "medlit/dialogue.hpp"

namespace httplib {
class Server;
}

namespace medlit {

struct ServiceOptions {
    bool debug = false;
    std::map<std::string, std::string> checksums;
    /// Receives one structured record per request.
    std::function<void(const nlohmann::json&)> log;
};

/// HTTP API under /v1:
///   POST /v1/chat    {session_id?, text, debug?}  -> response + session_id
///   GET  /v1/search  ?q=&k=[&bm25_threshold=&cosine_threshold=&strategy=]
///   POST /v1/answer  {question, debug?, bm25_threshold?, cosine_threshold?, top_k?, strategy?}
///   GET  /v1/health
/// Without an engine every endpoint except health answers 503.
class Service {
public:
    Service(std::shared_ptr<const ConversationEngine> engine, std::shared_ptr<SessionStore> sessions,
            ServiceOptions options = {});

    void mount(httplib::Server& server) const;

private:
    std::shared_ptr<const ConversationEngine> engine_;
    std::shared_ptr<SessionStore> sessions_;
    ServiceOptions options_;
};

}  // namespace medlit
