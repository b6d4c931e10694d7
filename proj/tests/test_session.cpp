#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "doctest.h"
#include "revealq/errors.hpp"
#include "revealq/session.hpp"
#include "revealq/sim_harness.hpp"

using namespace revealq;
namespace fs = std::filesystem;

namespace {

SessionLimits small_limits() {
    SessionLimits l;
    l.particles = 100;
    l.human_candidates = 60;
    l.candidates = 30;
    return l;
}

SessionSettings settings(Strategy strategy, double lambda = 1.0, std::uint64_t seed = 1) {
    SessionSettings s;
    s.environment = "tabletop";
    s.strategy.strategy = strategy;
    s.strategy.lambda = lambda;
    s.seed = seed;
    s.pool_size = 40;
    return s;
}

Answer teacher_answer(const Question& q, const Preferences& prefs, std::size_t round) {
    Rng rng(1000 + round);
    return sample_answer(q, prefs, rng);
}

// Plays `rounds` questions with a simulated teacher.
void play(Session& s, std::size_t rounds, const Preferences& prefs, std::int64_t t0 = 100) {
    for (std::size_t i = 0; i < rounds; ++i) {
        const std::optional<Question> q = s.next_question(t0 + static_cast<std::int64_t>(i));
        REQUIRE(q.has_value());
        s.submit_answer(q->index(), teacher_answer(*q, prefs, i), t0 + static_cast<std::int64_t>(i));
    }
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("revealq-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

const Preferences kTruth = Preferences::from_unnormalized({0.7, -0.2, 0.6});

}  // namespace

TEST_CASE("a session walks through question, answer and deploy") {
    Session s = Session::create("abc", settings(Strategy::Combined), small_limits(), 10);
    CHECK(s.status() == SessionStatus::Active);
    CHECK(s.answered() == 0);
    const std::optional<Question> q = s.next_question(11);
    REQUIRE(q);
    CHECK(q->index() == 1);
    CHECK(s.next_question(12)->index() == 1);  // re-fetch returns the pending question
    const Json payload = s.question_payload(*q);
    CHECK(payload["index"] == 1);
    CHECK(payload["trajectories"].size() == 2);
    CHECK(payload["trajectories"][0].contains("waypoints"));
    CHECK(payload["trajectories"][0].contains("features"));
    CHECK(payload["scene"]["landmarks"].size() == 3);

    s.submit_answer(1, Answer::choice(0), 13);
    const Json b = s.belief_payload();
    CHECK(b["round"] == 1);
    CHECK(b["z_star"]["mu"].size() == 3);
    CHECK(b["z_star"]["sigma"].size() == 3);
    CHECK(b["preview_waypoints"].size() == tabletop::kWaypoints);

    s.deploy(14);
    CHECK(s.status() == SessionStatus::Deployed);
    CHECK_THROWS_AS(s.next_question(15), ConflictError);
    CHECK_THROWS_AS(s.deploy(15), ConflictError);
}

TEST_CASE("re-answering a question is a conflict and leaves the state unchanged") {
    Session s = Session::create("abc", settings(Strategy::Informative), small_limits(), 0);
    const Question q = *s.next_question(1);
    s.submit_answer(q.index(), Answer::choice(1), 2);
    const Json before = s.snapshot();
    CHECK_THROWS_WITH_AS(s.submit_answer(q.index(), Answer::choice(0), 3), "question 1 was already answered",
                         ConflictError);
    CHECK(s.snapshot() == before);

    const Question q2 = *s.next_question(4);
    CHECK_THROWS_AS(s.submit_answer(q2.index() + 3, Answer::choice(0), 5), ConflictError);
    CHECK_THROWS_AS(s.submit_answer(q2.index(), Answer::choice(2), 5), ValidationError);
    CHECK(s.answered() == 1);
    CHECK(s.pending().has_value());
}

TEST_CASE("deploying after six answers freezes the belief") {
    Session s = Session::create("abc", settings(Strategy::Combined), small_limits(), 0);
    play(s, 6, kTruth);
    const Json belief = to_json(s.belief());
    s.deploy(50);
    CHECK(s.status() == SessionStatus::Deployed);
    CHECK(to_json(s.belief()) == belief);
    CHECK(s.belief_payload()["round"] == 6);
    CHECK(s.belief_payload()["status"] == "deployed");
}

TEST_CASE("sessions stop asking after twelve questions") {
    Session s = Session::create("abc", settings(Strategy::Random), small_limits(), 0);
    play(s, 12, kTruth);
    CHECK(s.complete());
    CHECK_FALSE(s.next_question(100).has_value());
    CHECK_THROWS_AS(s.pose({0, 1}, 100), ConflictError);
    CHECK(s.belief_payload()["complete"] == true);
    s.deploy(101);
    CHECK(s.status() == SessionStatus::Deployed);
}

TEST_CASE("combined with zero lambda asks the informative sequence") {
    Session a = Session::create("a", settings(Strategy::Combined, 0.0, 7), small_limits(), 0);
    Session b = Session::create("b", settings(Strategy::Informative, 1.0, 7), small_limits(), 0);
    for (std::size_t i = 0; i < 8; ++i) {
        const Question qa = *a.next_question(1);
        const Question qb = *b.next_question(1);
        REQUIRE(qa.at(0).id() == qb.at(0).id());
        REQUIRE(qa.at(1).id() == qb.at(1).id());
        const Answer ans = teacher_answer(qa, kTruth, i);
        a.submit_answer(qa.index(), ans, 2);
        b.submit_answer(qb.index(), ans, 2);
    }
}

TEST_CASE("I don't know on identical trajectories leaves the learned spread unchanged") {
    Session s = Session::create("abc", settings(Strategy::Combined), small_limits(), 0);
    const LearningSummary before = s.z_star();
    const Question& q = s.pose({5, 5}, 1);
    s.submit_answer(q.index(), Answer::idk(), 2);
    const LearningSummary after = s.z_star();
    for (std::size_t c = 0; c < before.dim(); ++c) {
        CHECK(std::fabs(after.sigma[c] - before.sigma[c]) < 1e-9);
        CHECK(std::fabs(after.mu[c] - before.mu[c]) < 1e-9);
    }
}

TEST_CASE("consistently preferring low height shrinks the height spread") {
    std::size_t shrunk = 0;
    const std::size_t seeds = 20;
    for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
        Session s = Session::create("abc", settings(Strategy::Combined, 1.0, seed), small_limits(), 0);
        const double before = s.z_star().sigma[0];
        for (std::int64_t round = 1; round <= 6; ++round) {
            const Question q = *s.next_question(round);
            const double h0 = q.at(0).features()[0];
            const double h1 = q.at(1).features()[0];
            s.submit_answer(q.index(), h0 == h1 ? Answer::idk() : Answer::choice(h0 < h1 ? 0 : 1), round);
        }
        if (s.z_star().sigma[0] < before) ++shrunk;
    }
    CHECK(shrunk >= 18);
}

TEST_CASE("snapshots replay to the same session") {
    Session s = Session::create("abc", settings(Strategy::Revealing), small_limits(), 0);
    play(s, 4, kTruth);
    s.next_question(20);
    const Json snap = s.snapshot();
    const Session back = Session::from_snapshot(Json::parse(snap.dump()));
    CHECK(back.snapshot() == snap);
    CHECK(back.answered() == 4);
    REQUIRE(back.pending().has_value());
    CHECK(back.pending()->index() == 5);
}

TEST_CASE("a snapshot whose belief disagrees with its events is rejected") {
    Session s = Session::create("abc", settings(Strategy::Informative), small_limits(), 0);
    play(s, 2, kTruth);
    Json snap = s.snapshot();
    snap["belief"]["weights"][0] = 0.5;
    CHECK_THROWS_AS(Session::from_snapshot(snap), ValidationError);
    snap = s.snapshot();
    snap["status"] = "deployed";
    CHECK_THROWS_AS(Session::from_snapshot(snap), ValidationError);
}

TEST_CASE("idle sessions expire") {
    Session s = Session::create("abc", settings(Strategy::Informative), small_limits(), 0);
    CHECK_FALSE(s.expire_if_idle(100, 3600));
    CHECK(s.expire_if_idle(4000, 3600));
    CHECK(s.status() == SessionStatus::Expired);
    CHECK_THROWS_AS(s.next_question(4001), ConflictError);
    CHECK_FALSE(s.expire_if_idle(9000, 3600));
}

TEST_CASE("session settings are validated") {
    CHECK_THROWS_AS(session_settings_from_json(Json{{"strategy", "random"}}), ValidationError);
    CHECK_THROWS_AS(session_settings_from_json(Json{{"environment", "tabletop"}, {"speed", 2}}), ValidationError);
    CHECK_THROWS_AS(session_settings_from_json(Json{{"environment", "moon"}}), ValidationError);
    CHECK_THROWS_AS(session_settings_from_json(Json{{"environment", "tabletop"}, {"strategy", "greedy"}}),
                    ValidationError);
    CHECK_THROWS_AS(session_settings_from_json(Json{{"environment", "tabletop"}, {"k", 0}}), ValidationError);
    const SessionSettings ok = session_settings_from_json(
        Json{{"environment", "driving"}, {"strategy", "combined"}, {"lambda", 2.5}, {"k", 4}, {"seed", 9}});
    CHECK(ok.strategy.lambda == 2.5);
    CHECK(ok.strategy.model_memory == 4);
    CHECK(ok.seed == 9);
}

TEST_CASE("the store persists sessions and reloads them") {
    TempDir dir;
    std::string id;
    Json snap;
    {
        SessionStore store(dir.path, small_limits());
        id = store.create(settings(Strategy::Combined));
        CHECK(id.size() == 16);
        CHECK(fs::exists(store.path_for(id)));
        store.with_session(id, [](Session& s) {
            play(s, 3, kTruth, unix_now());
            return 0;
        });
        snap = store.with_session(id, [](Session& s) { return s.snapshot(); });
        CHECK_THROWS_AS(store.with_session("nope", [](Session& s) { return s.answered(); }), NotFoundError);
    }
    std::ofstream(dir.path / "broken.json") << "{not json";
    SessionStore reloaded(dir.path, small_limits());
    CHECK(reloaded.size() == 1);
    CHECK(reloaded.load_errors().size() == 1);
    CHECK(reloaded.with_session(id, [](Session& s) { return s.snapshot(); }) == snap);
}

TEST_CASE("the store expires idle sessions on access") {
    TempDir dir;
    SessionStore store(dir.path, small_limits(), 1);
    const std::string id = store.create(settings(Strategy::Random));
    Json snap = store.with_session(id, [](Session& s) { return s.snapshot(); });
    snap["updated_at"] = unix_now() - 10;
    snap["created_at"] = unix_now() - 10;
    std::ofstream(store.path_for(id)) << snap.dump();
    SessionStore reloaded(dir.path, small_limits(), 1);
    CHECK(reloaded.with_session(id, [](Session& s) { return s.status(); }) == SessionStatus::Expired);
    CHECK(Json::parse(std::ifstream(reloaded.path_for(id)))["status"] == "expired");
}
