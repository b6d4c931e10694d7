#pragma once

// Live teaching sessions. A session's state is derived from its append-only
// event log; snapshots carry the log plus the resulting belief so a reload can
// verify that replay reproduces it.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "revealq/environments.hpp"
#include "revealq/human_model.hpp"
#include "revealq/json_io.hpp"
#include "revealq/question_select.hpp"
#include "revealq/robot_belief.hpp"

namespace revealq {

enum class SessionStatus { Active, Deployed, Expired };

std::string to_string(SessionStatus s);
SessionStatus parse_session_status(const std::string& s);

// What a client chooses when creating a session.
struct SessionSettings {
    std::string environment;
    SelectionConfig strategy;  // strategy.model_memory is the session's k
    std::uint64_t seed = 1;
    std::size_t pool_size = 100;
    std::size_t dim = 3;  // synthetic only

    void validate() const;
};

// Decodes a POST /sessions body: {environment, strategy, lambda, k, seed}
// plus optional pool_size and dim.
SessionSettings session_settings_from_json(const Json& body);

// Server-wide sizing, fixed for the lifetime of a session.
struct SessionLimits {
    std::size_t particles = 200;
    std::size_t human_candidates = 500;
    std::size_t candidates = 100;
    std::size_t max_rounds = 12;
};

struct SessionEvent {
    enum class Type { Question, Answer, Deploy, Expire };
    Type type = Type::Question;
    std::size_t index = 0;  // question index (1-based); 0 for deploy/expire
    std::vector<TrajectoryId> trajectories;  // Question only
    std::optional<Answer> answer;            // Answer only
    std::int64_t at = 0;                     // unix seconds
};

Json to_json(const SessionEvent& e);
SessionEvent session_event_from_json(const Json& j);

class Session {
public:
    static Session create(std::string id, SessionSettings settings, SessionLimits limits, std::int64_t now);

    // Rebuilds a session from its snapshot by replaying the event log. Throws
    // ValidationError if the replayed belief differs from the stored one.
    static Session from_snapshot(const Json& snapshot);
    Json snapshot() const;

    const std::string& id() const { return id_; }
    SessionStatus status() const { return status_; }
    const SessionSettings& settings() const { return settings_; }
    const SessionLimits& limits() const { return limits_; }
    const Environment& environment() const { return *env_; }
    const RobotBelief& belief() const { return belief_; }
    const HumanBelief& human_model() const { return human_model_; }
    const std::vector<SessionEvent>& events() const { return events_; }
    const std::optional<Question>& pending() const { return pending_; }
    std::size_t answered() const { return answered_; }
    bool complete() const { return answered_ >= limits_.max_rounds; }
    std::int64_t created_at() const { return created_at_; }
    std::int64_t updated_at() const { return updated_at_; }
    std::uint64_t revision() const { return revision_; }

    LearningSummary z_star() const;
    // Learned-optimal trajectory for the current belief.
    const Trajectory& preview() const;

    // The pending question if there is one, otherwise a newly selected one.
    // Returns nullopt once the round cap is reached. Throws ConflictError
    // unless the session is Active.
    std::optional<Question> next_question(std::int64_t now);
    // Asks a specific question built from pool trajectories. Throws
    // ConflictError if a question is already pending or the session is not Active.
    const Question& pose(const std::vector<TrajectoryId>& ids, std::int64_t now);
    // Throws ConflictError on a stale index or when nothing is pending, and
    // ValidationError on a slot outside the question.
    void submit_answer(std::size_t index, const Answer& answer, std::int64_t now);
    void deploy(std::int64_t now);
    // Active sessions idle for longer than `ttl_seconds` become Expired.
    bool expire_if_idle(std::int64_t now, std::int64_t ttl_seconds);

    // {index, trajectories, scene}
    Json question_payload(const Question& q) const;
    // {z_star, preview_waypoints, round, status}
    Json belief_payload() const;
    // Observer-model summary and the scores of the last selection.
    Json debug_payload() const;
    // Status, round and pending index for page reloads.
    Json state_payload() const;

private:
    Session() = default;
    void apply(const SessionEvent& e);
    void record(SessionEvent e, std::int64_t now);
    void require_active(const char* action) const;

    std::string id_;
    SessionSettings settings_;
    SessionLimits limits_;
    std::shared_ptr<const Environment> env_;
    RobotBelief belief_;
    HumanBelief human_model_;
    std::vector<SessionEvent> events_;
    std::optional<Question> pending_;
    std::vector<CandidateScore> last_scores_;
    std::size_t answered_ = 0;
    SessionStatus status_ = SessionStatus::Active;
    std::int64_t created_at_ = 0;
    std::int64_t updated_at_ = 0;
    std::uint64_t revision_ = 0;
};

std::int64_t unix_now();

// Flat-file store: one JSON snapshot per session under `dir`, rewritten after
// every state change. Operations on one session are serialized; different
// sessions proceed independently.
class SessionStore {
public:
    SessionStore(std::filesystem::path dir, SessionLimits limits, std::int64_t ttl_seconds = 24 * 3600);

    // Snapshots that failed to load at startup, with reasons.
    const std::vector<std::string>& load_errors() const { return load_errors_; }
    std::size_t size() const;

    std::string create(const SessionSettings& settings);

    // Runs `f(Session&)` under the session's lock after applying idle expiry,
    // and persists the session if it changed. `f` must return a value.
    // Throws NotFoundError for unknown ids.
    template <class F>
    auto with_session(const std::string& id, F&& f) -> decltype(f(std::declval<Session&>()));

    std::filesystem::path path_for(const std::string& id) const;

private:
    struct Slot {
        std::mutex mutex;
        Session session;
        explicit Slot(Session s) : session(std::move(s)) {}
    };

    std::shared_ptr<Slot> find(const std::string& id) const;
    void persist(const Session& s) const;

    std::filesystem::path dir_;
    SessionLimits limits_;
    std::int64_t ttl_seconds_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
    std::vector<std::string> load_errors_;
    std::uint64_t id_state_;
};

template <class F>
auto SessionStore::with_session(const std::string& id, F&& f) -> decltype(f(std::declval<Session&>())) {
    std::shared_ptr<Slot> slot = find(id);
    std::lock_guard<std::mutex> lock(slot->mutex);
    Session& s = slot->session;
    const std::uint64_t before = s.revision();
    s.expire_if_idle(unix_now(), ttl_seconds_);
    try {
        auto result = f(s);
        if (s.revision() != before) {
            persist(s);
        }
        return result;
    } catch (...) {
        if (s.revision() != before) {
            persist(s);
        }
        throw;
    }
}

}  // namespace revealq
