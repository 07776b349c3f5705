#include "medlit/dialogue.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <random>
#include <unordered_set>

#include "medlit/error.hpp"
#include "medlit/text.hpp"

namespace medlit {
namespace {

constexpr std::array<std::string_view, 8> kCannedReplies{
    "That's interesting, tell me more.",
    "I see. How has your day been going?",
    "Sounds good to me!",
    "I'm happy to keep chatting. Anything on your mind?",
    "Hmm, I hadn't thought about it that way.",
    "Really? What made you think of that?",
    "I'm mostly here for research questions, but I enjoy a good chat too.",
    "Thanks for sharing that with me.",
};

std::string new_session_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

Timestamp system_now() {
    return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

void Session::append(Speaker speaker, std::string text, Timestamp now) {
    const Timestamp ts = turns.empty() ? now : std::max(now, turns.back().timestamp + 1);
    turns.push_back(Turn{speaker, std::move(text), ts});
    last_active = std::max(last_active, ts);
}

std::string CannedGenerator::generate(const std::vector<Turn>& history) const {
    auto last_user = std::find_if(history.rbegin(), history.rend(), [](const Turn& t) { return t.speaker == Speaker::user; });
    if (last_user == history.rend()) return std::string(kGreeting);
    return std::string(kCannedReplies[fnv1a64(to_lower_ascii(trim(last_user->text))) % kCannedReplies.size()]);
}

// --- SessionStore -----------------------------------------------------------

SessionStore::SessionStore(std::chrono::seconds ttl, Clock clock) : ttl_(ttl), clock_(std::move(clock)) {
    if (ttl.count() <= 0) throw InvalidParameter("session TTL must be positive");
}

bool SessionStore::idle(const Session& s, Timestamp now) const {
    return now - s.last_active > std::chrono::duration_cast<std::chrono::microseconds>(ttl_).count();
}

std::string SessionStore::create() {
    auto slot = std::make_shared<Slot>();
    const Timestamp now = clock_();
    slot->session.created_at = now;
    slot->session.last_active = now;
    std::lock_guard lock(mutex_);
    std::string id;
    do {
        id = new_session_id();
    } while (sessions_.contains(id));
    slot->session.session_id = id;
    sessions_.emplace(id, std::move(slot));
    return id;
}

std::shared_ptr<SessionStore::Slot> SessionStore::lookup(const std::string& id) {
    std::shared_ptr<Slot> slot;
    {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw NotFound("unknown session: " + id);
        slot = it->second;
    }
    bool expired;
    {
        std::lock_guard lock(slot->mutex);
        expired = idle(slot->session, clock_());
    }
    if (expired) {
        std::lock_guard lock(mutex_);
        sessions_.erase(id);
        throw NotFound("session expired: " + id);
    }
    return slot;
}

Session SessionStore::get(const std::string& id) {
    return with_session(id, [](Session& s) { return s; });
}

void SessionStore::touch(const std::string& id) {
    const Timestamp now = clock_();
    with_session(id, [now](Session& s) { s.last_active = std::max(s.last_active, now); });
}

bool SessionStore::expire(const std::string& id) {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return false;
    bool is_idle;
    {
        // A session whose lock is held is mid-turn, so it is not idle.
        std::unique_lock slot_lock(it->second->mutex, std::try_to_lock);
        is_idle = slot_lock.owns_lock() && idle(it->second->session, clock_());
    }
    if (is_idle) sessions_.erase(it);
    return is_idle;
}

std::size_t SessionStore::expire_idle() {
    const Timestamp now = clock_();
    std::lock_guard lock(mutex_);
    return std::erase_if(sessions_, [&](const auto& kv) {
        std::unique_lock slot_lock(kv.second->mutex, std::try_to_lock);
        return slot_lock.owns_lock() && idle(kv.second->session, now);
    });
}

std::size_t SessionStore::size() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

void SessionStore::save_snapshot(const std::filesystem::path& path) const {
    auto arr = nlohmann::json::array();
    {
        std::lock_guard lock(mutex_);
        std::vector<std::string> ids;
        for (const auto& [id, _] : sessions_) ids.push_back(id);
        std::sort(ids.begin(), ids.end());
        for (const auto& id : ids) {
            const auto& slot = sessions_.at(id);
            std::lock_guard slot_lock(slot->mutex);
            arr.push_back(to_json(slot->session));
        }
    }
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        out << nlohmann::json{{"sessions", arr}}.dump() << '\n';
        if (!out) throw Error("failed writing session snapshot " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

void SessionStore::load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("session snapshot not found: " + path.string());
    std::unordered_map<std::string, std::shared_ptr<Slot>> loaded;
    try {
        const auto j = nlohmann::json::parse(in);
        for (const auto& s : j.at("sessions")) {
            auto slot = std::make_shared<Slot>();
            slot->session = session_from_json(s);
            loaded.emplace(slot->session.session_id, std::move(slot));
        }
    } catch (const nlohmann::json::exception& e) {
        throw CorruptArtifact(std::string("session snapshot unreadable: ") + e.what());
    }
    std::lock_guard lock(mutex_);
    sessions_ = std::move(loaded);
}

// --- Engine -----------------------------------------------------------------

void Artifacts::check_consistent() const {
    std::unordered_set<std::string> ids;
    for (const auto& d : corpus.documents()) ids.insert(d.doc_id);
    auto same = [&](const std::vector<std::string>& other) {
        if (other.size() != ids.size()) return false;
        return std::all_of(other.begin(), other.end(), [&](const std::string& id) { return ids.contains(id); });
    };
    if (!same(index.doc_ids())) throw ConsistencyError("sparse index and corpus cover different documents");
    if (!same(store.doc_ids())) throw ConsistencyError("vector store and corpus cover different documents");
}

Providers Providers::builtin(std::size_t embedding_dimension) {
    return Providers{std::make_shared<HashedEmbedder>(embedding_dimension), std::make_shared<OverlapExtractor>(),
                     std::make_shared<DictionaryClassifier>(), std::make_shared<CannedGenerator>()};
}

ConversationEngine::ConversationEngine(std::shared_ptr<const Artifacts> artifacts, Providers providers,
                                       EngineOptions options)
    : artifacts_(std::move(artifacts)), providers_(std::move(providers)), options_(std::move(options)) {
    if (!artifacts_) throw InvalidInput("engine requires loaded artifacts");
    if (!providers_.embedder || !providers_.extractor || !providers_.classifier || !providers_.generator) {
        throw InvalidInput("engine requires all four providers");
    }
    if (providers_.embedder->dimension() != artifacts_->store.dimension()) {
        throw ConsistencyError("embedding provider dimension " + std::to_string(providers_.embedder->dimension()) +
                               " does not match vector store dimension " +
                               std::to_string(artifacts_->store.dimension()));
    }
    options_.fusion.validate();
    artifacts_->check_consistent();
}

RetrievalResult ConversationEngine::search(std::string_view query, const FusionConfig& cfg) const {
    return retrieve(query, artifacts_->index, artifacts_->store, *providers_.embedder, cfg);
}

SystemResponse ConversationEngine::run_ir(std::string_view retrieval_query, std::string_view question,
                                          const FusionConfig& cfg) const {
    const auto t0 = std::chrono::steady_clock::now();
    const auto retrieved = search(retrieval_query, cfg);
    const double retrieval_ms = elapsed_ms(t0);

    const auto t1 = std::chrono::steady_clock::now();
    auto response =
        answer_pipeline(question, retrieved.candidates, artifacts_->corpus, *providers_.extractor, options_.answer);
    const double answer_ms = elapsed_ms(t1);

    response.diagnostics["retrieval"] = {
        {"query", std::string(retrieval_query)},
        {"strategy", std::string(strategy_name(retrieved.strategy_used))},
        {"sparse", {{"scored", retrieved.sparse.scored}, {"passed", retrieved.sparse.passed}, {"top", retrieved.sparse.top_score}}},
        {"dense", {{"scored", retrieved.dense.scored}, {"passed", retrieved.dense.passed}, {"top", retrieved.dense.top_score}}},
        {"pool_size", retrieved.pool_size},
        {"returned", retrieved.candidates.size()},
        {"warnings", retrieved.warnings}};
    response.diagnostics["timings_ms"] = {{"retrieval", retrieval_ms}, {"answer", answer_ms}};
    return response;
}

SystemResponse ConversationEngine::answer(std::string_view question) const {
    return answer(question, options_.fusion);
}

SystemResponse ConversationEngine::answer(std::string_view question, const FusionConfig& cfg) const {
    const auto analysis = analyze_turn({}, question, *providers_.classifier, options_.dictionary);
    auto r = run_ir(analysis.enriched_text, analysis.resolved_text, cfg);
    r.diagnostics["nlu"] = to_json(analysis);
    return r;
}

TurnOutcome ConversationEngine::handle_turn(Session& session, std::string_view utterance, Timestamp now) const {
    const std::string text = trim(utterance);
    if (text.empty()) throw InvalidInput("empty utterance");

    TurnOutcome out;
    out.analysis = analyze_turn(session.disease_entities, text, *providers_.classifier, options_.dictionary);
    session.append(Speaker::user, text, now);

    if (out.analysis.is_covid) {
        try {
            out.response = run_ir(out.analysis.enriched_text, out.analysis.resolved_text, options_.fusion);
        } catch (const std::exception& e) {
            out.response = clarification_response();
            out.response.diagnostics["error"] = e.what();
        }
        for (const auto& entity : out.analysis.matched_entities) {
            if (session.disease_entities.empty() || session.disease_entities.back() != entity) {
                session.disease_entities.push_back(entity);
            }
        }
        out.response.diagnostics["route"] = "ir";
    } else {
        std::string reply;
        try {
            reply = providers_.generator->generate(session.turns);
        } catch (const std::exception& e) {
            out.response.diagnostics["generator_error"] = e.what();
        }
        if (reply.empty()) reply = CannedGenerator().generate(session.turns);
        out.response.kind = ResponseKind::smalltalk;
        out.response.items.push_back(ResponseItem{std::move(reply), std::nullopt, {}, 0.0});
        out.response.diagnostics["route"] = "smalltalk";
    }
    out.response.diagnostics["nlu"] = to_json(out.analysis);
    session.append(Speaker::bot, render_text(out.response), now);
    return out;
}

std::string render_text(const SystemResponse& r) {
    switch (r.kind) {
        case ResponseKind::answers: {
            const auto& top = r.items.front();
            return top.text + (top.paper_title && !top.paper_title->empty() ? " (" + *top.paper_title + ")" : "");
        }
        case ResponseKind::document_list: {
            std::vector<std::string> titles;
            for (const auto& it : r.items) titles.push_back(it.text);
            return "These papers may help: " + join(titles, "; ");
        }
        case ResponseKind::clarification:
        case ResponseKind::smalltalk:
            return r.items.empty() ? std::string{} : r.items.front().text;
    }
    return {};
}

nlohmann::json to_json(const Session& s) {
    auto turns = nlohmann::json::array();
    for (const auto& t : s.turns) {
        turns.push_back({{"speaker", t.speaker == Speaker::user ? "user" : "bot"}, {"text", t.text}, {"timestamp", t.timestamp}});
    }
    return {{"session_id", s.session_id},
            {"turns", turns},
            {"disease_entities", s.disease_entities},
            {"created_at", s.created_at},
            {"last_active", s.last_active}};
}

Session session_from_json(const nlohmann::json& j) {
    Session s;
    s.session_id = j.at("session_id").get<std::string>();
    for (const auto& t : j.at("turns")) {
        const auto speaker = t.at("speaker").get<std::string>();
        if (speaker != "user" && speaker != "bot") throw InvalidInput("bad speaker in session: " + speaker);
        s.turns.push_back(Turn{speaker == "user" ? Speaker::user : Speaker::bot, t.at("text").get<std::string>(),
                               t.at("timestamp").get<Timestamp>()});
    }
    s.disease_entities = j.at("disease_entities").get<std::vector<std::string>>();
    s.created_at = j.at("created_at").get<Timestamp>();
    s.last_active = j.at("last_active").get<Timestamp>();
    return s;
}

}  // namespace medlit
