#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "medlit/answer.hpp"
#include "medlit/corpus.hpp"
#include "medlit/dense_index.hpp"
#include "medlit/fusion.hpp"
#include "medlit/nlu.hpp"
#include "medlit/sparse_index.hpp"

namespace medlit {

/// Microseconds since the Unix epoch.
using Timestamp = std::int64_t;
using Clock = std::function<Timestamp()>;

Timestamp system_now();

enum class Speaker { user, bot };

struct Turn {
    Speaker speaker = Speaker::user;
    std::string text;
    Timestamp timestamp = 0;

    bool operator==(const Turn&) const = default;
};

struct Session {
    std::string session_id;
    std::vector<Turn> turns;
    std::vector<std::string> disease_entities;
    Timestamp created_at = 0;
    Timestamp last_active = 0;

    /// Appends a turn, keeping timestamps strictly increasing.
    void append(Speaker speaker, std::string text, Timestamp now);

    bool operator==(const Session&) const = default;
};

class Generator {
public:
    virtual ~Generator() = default;
    /// Returns a non-empty reply. Throws ProviderError on failure.
    virtual std::string generate(const std::vector<Turn>& history) const = 0;
};

/// Picks a reply from a fixed table by hashing the last user turn.
class CannedGenerator final : public Generator {
public:
    std::string generate(const std::vector<Turn>& history) const override;

    static constexpr std::string_view kGreeting =
        "Hi! I can chat, and I can look up answers about coronaviruses in the research literature.";
};

/// In-memory sessions with idle expiry. Each session has its own lock so
/// turns within a session are serialized while different sessions proceed
/// in parallel.
class SessionStore {
public:
    explicit SessionStore(std::chrono::seconds ttl, Clock clock = system_now);

    std::string create();
    /// Snapshot copy. Throws NotFound for unknown or idle-expired ids.
    Session get(const std::string& id);
    void touch(const std::string& id);
    /// Removes the session if it has been idle longer than the TTL.
    bool expire(const std::string& id);
    /// Removes every idle session; returns how many were removed.
    std::size_t expire_idle();
    std::size_t size() const;

    /// Runs fn(Session&) under the session's lock. Throws NotFound.
    template <typename Fn>
    auto with_session(const std::string& id, Fn&& fn) {
        auto slot = lookup(id);
        std::lock_guard lock(slot->mutex);
        return fn(slot->session);
    }

    Timestamp now() const { return clock_(); }

    void save_snapshot(const std::filesystem::path& path) const;
    /// Replaces the current sessions with the snapshot contents.
    void load_snapshot(const std::filesystem::path& path);

private:
    struct Slot {
        std::mutex mutex;
        Session session;
    };

    std::shared_ptr<Slot> lookup(const std::string& id);
    bool idle(const Session& s, Timestamp now) const;

    std::chrono::seconds ttl_;
    Clock clock_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::shared_ptr<Slot>> sessions_;
};

/// Read-only retrieval artifacts shared by all requests.
struct Artifacts {
    Corpus corpus;
    InvertedIndex index;
    DenseStore store;

    /// Throws ConsistencyError unless corpus, index and store cover the same documents.
    void check_consistent() const;
};

struct Providers {
    std::shared_ptr<const EmbeddingProvider> embedder;
    std::shared_ptr<const SpanExtractor> extractor;
    std::shared_ptr<const CovidClassifier> classifier;
    std::shared_ptr<const Generator> generator;

    /// Deterministic built-ins; no external services.
    static Providers builtin(std::size_t embedding_dimension = defaults::kEmbeddingDimension);
};

struct EngineOptions {
    FusionConfig fusion;
    AnswerOptions answer;
    DiseaseDictionary dictionary = DiseaseDictionary::builtin();
};

struct TurnOutcome {
    SystemResponse response;
    TurnAnalysis analysis;
};

class ConversationEngine {
public:
    ConversationEngine(std::shared_ptr<const Artifacts> artifacts, Providers providers, EngineOptions options);

    RetrievalResult search(std::string_view query, const FusionConfig& cfg) const;
    RetrievalResult search(std::string_view query) const { return search(query, options_.fusion); }

    /// Single question through enrichment, retrieval and extraction; never smalltalk.
    SystemResponse answer(std::string_view question) const;
    SystemResponse answer(std::string_view question, const FusionConfig& cfg) const;

    /// Routes a user turn: coronavirus turns go to retrieval and extraction,
    /// everything else to the generator. Records both turns in the session.
    TurnOutcome handle_turn(Session& session, std::string_view utterance, Timestamp now = system_now()) const;

    const Artifacts& artifacts() const noexcept { return *artifacts_; }
    const EngineOptions& options() const noexcept { return options_; }

private:
    SystemResponse run_ir(std::string_view retrieval_query, std::string_view question, const FusionConfig& cfg) const;

    std::shared_ptr<const Artifacts> artifacts_;
    Providers providers_;
    EngineOptions options_;
};

/// One-line rendering of a response, used as the bot turn in session history.
std::string render_text(const SystemResponse& r);

nlohmann::json to_json(const Session& s);
Session session_from_json(const nlohmann::json& j);

}  // namespace medlit
