#include <atomic>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "fixtures.hpp"
#include "medlit/dialogue.hpp"
#include "medlit/error.hpp"

using namespace medlit;

namespace {

struct FakeClock {
    std::shared_ptr<std::atomic<Timestamp>> t = std::make_shared<std::atomic<Timestamp>>(1'000'000);
    Clock clock() const {
        auto p = t;
        return [p] { return p->load(); };
    }
    void advance_seconds(int s) { *t += static_cast<Timestamp>(s) * 1'000'000; }
};

ConversationEngine engine() {
    static const auto artifacts = fixture::covid20();
    return ConversationEngine(artifacts, Providers::builtin(), EngineOptions{});
}

}  // namespace

TEST_CASE("session timestamps increase strictly") {
    Session s;
    s.append(Speaker::user, "a", 10);
    s.append(Speaker::bot, "b", 10);
    s.append(Speaker::user, "c", 5);
    CHECK(s.turns[0].timestamp == 10);
    CHECK(s.turns[1].timestamp == 11);
    CHECK(s.turns[2].timestamp == 12);
    CHECK(s.last_active == 12);
}

TEST_CASE("canned generator") {
    CannedGenerator g;
    CHECK(g.generate({}) == CannedGenerator::kGreeting);
    const std::vector<Turn> h{{Speaker::user, "hello", 1}};
    CHECK_FALSE(g.generate(h).empty());
    CHECK(g.generate(h) == g.generate(h));
}

TEST_CASE("session store lifecycle") {
    FakeClock clock;
    SessionStore store(std::chrono::seconds(60), clock.clock());
    const auto id = store.create();
    CHECK(store.size() == 1);
    CHECK(store.get(id).session_id == id);
    CHECK_THROWS_AS(store.get("missing"), NotFound);

    clock.advance_seconds(30);
    store.touch(id);
    clock.advance_seconds(45);
    CHECK_FALSE(store.expire(id));
    CHECK(store.expire_idle() == 0);
    clock.advance_seconds(16);
    CHECK(store.expire_idle() == 1);
    CHECK_THROWS_AS(store.get(id), NotFound);
}

TEST_CASE("expired sessions vanish on access") {
    FakeClock clock;
    SessionStore store(std::chrono::seconds(10), clock.clock());
    const auto id = store.create();
    clock.advance_seconds(11);
    CHECK_THROWS_AS(store.with_session(id, [](Session&) { return 0; }), NotFound);
    CHECK(store.size() == 0);
}

TEST_CASE("turns in one session are serialized") {
    SessionStore store(std::chrono::seconds(600));
    const auto id = store.create();
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 200; ++i) {
                store.with_session(id, [&](Session& s) {
                    s.append(Speaker::user, "x", store.now());
                    return 0;
                });
            }
        });
    }
    for (auto& th : threads) th.join();
    const auto s = store.get(id);
    REQUIRE(s.turns.size() == 1600);
    for (std::size_t i = 1; i < s.turns.size(); ++i) CHECK(s.turns[i].timestamp > s.turns[i - 1].timestamp);
}

TEST_CASE("snapshot round-trip") {
    SessionStore store(std::chrono::seconds(600));
    const auto id = store.create();
    store.with_session(id, [](Session& s) {
        s.append(Speaker::user, "what is covid?", 5);
        s.disease_entities.push_back("covid-19");
        return 0;
    });
    const auto path = std::filesystem::temp_directory_path() / "medlit_sessions_test.json";
    store.save_snapshot(path);
    SessionStore other(std::chrono::seconds(600));
    other.load_snapshot(path);
    CHECK(other.get(id) == store.get(id));
    std::filesystem::remove(path);
    CHECK(session_from_json(to_json(store.get(id))) == store.get(id));
}

TEST_CASE("routing: smalltalk versus retrieval") {
    const auto e = engine();
    Session s;
    const auto hello = e.handle_turn(s, "hello", 1);
    CHECK(hello.response.kind == ResponseKind::smalltalk);
    CHECK(hello.response.diagnostics["route"] == "smalltalk");

    const auto q = e.handle_turn(s, "what is the incubation period of covid-19?", 2);
    CHECK(q.response.diagnostics["route"] == "ir");
    CHECK(q.response.kind != ResponseKind::smalltalk);
    CHECK(s.disease_entities == std::vector<std::string>{"covid-19"});

    const auto follow = e.handle_turn(s, "how does it spread?", 3);
    CHECK(follow.analysis.resolved_text == "how does covid-19 spread?");
    CHECK(follow.response.diagnostics["route"] == "ir");
    CHECK(s.disease_entities.size() == 1);
    CHECK(s.turns.size() == 6);
    CHECK_THROWS_AS(e.handle_turn(s, "   ", 4), InvalidInput);
}

TEST_CASE("covid question yields answers with titles") {
    const auto e = engine();
    const auto r = e.answer("what is the incubation period of covid-19?");
    REQUIRE(r.kind == ResponseKind::answers);
    CHECK(r.items.size() <= 5);
    for (const auto& item : r.items) CHECK(item.paper_title.has_value());
    CHECK(r.diagnostics.contains("timings_ms"));
}

TEST_CASE("engine rejects inconsistent artifacts") {
    auto a = fixture::covid20(16);
    Artifacts broken{a->corpus, a->index, DenseStore(16, "x")};
    CHECK_THROWS_AS(ConversationEngine(std::make_shared<const Artifacts>(broken), Providers::builtin(16), EngineOptions{}),
                    ConsistencyError);
}
