#include "revealq/session.hpp"

#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "revealq/errors.hpp"
#include "revealq/sim_harness.hpp"

namespace revealq {
namespace {

const char* event_type_name(SessionEvent::Type t) {
    switch (t) {
        case SessionEvent::Type::Question:
            return "question";
        case SessionEvent::Type::Answer:
            return "answer";
        case SessionEvent::Type::Deploy:
            return "deploy";
        case SessionEvent::Type::Expire:
            return "expire";
    }
    return "unknown";
}

std::uint64_t get_unsigned(const Json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || !is_non_negative_integer(*it)) {
        throw ValidationError(where + "." + key + " must be a non-negative integer");
    }
    return it->get<std::uint64_t>();
}

std::int64_t get_time(const Json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer()) {
        throw ValidationError(where + "." + key + " must be an integer timestamp");
    }
    return it->get<std::int64_t>();
}

Json settings_json(const SessionSettings& s) {
    Json j{{"environment", s.environment},
           {"strategy", to_string(s.strategy.strategy)},
           {"lambda", s.strategy.lambda},
           {"k", s.strategy.model_memory},
           {"seed", s.seed},
           {"pool_size", s.pool_size},
           {"dim", s.dim}};
    return j;
}

Json limits_json(const SessionLimits& l) {
    return Json{{"particles", l.particles},
                {"human_candidates", l.human_candidates},
                {"candidates", l.candidates},
                {"max_rounds", l.max_rounds}};
}

SessionLimits limits_from_json(const Json& j) {
    SessionLimits l;
    l.particles = get_unsigned(j, "particles", "limits");
    l.human_candidates = get_unsigned(j, "human_candidates", "limits");
    l.candidates = get_unsigned(j, "candidates", "limits");
    l.max_rounds = get_unsigned(j, "max_rounds", "limits");
    return l;
}

Json scores_to_json(const std::vector<CandidateScore>& scores) {
    Json out = Json::array();
    for (const CandidateScore& s : scores) {
        out.push_back(Json{{"candidate", s.candidate},
                           {"question", Json::array({s.first, s.second})},
                           {"info_gain", s.info_gain},
                           {"reveal_score", s.reveal_score},
                           {"combined", s.combined}});
    }
    return out;
}

std::vector<CandidateScore> scores_from_json(const Json& j) {
    std::vector<CandidateScore> out;
    if (!j.is_array()) {
        return out;
    }
    for (const Json& s : j) {
        CandidateScore c;
        c.candidate = s.at("candidate").get<std::size_t>();
        c.first = s.at("question").at(0).get<TrajectoryId>();
        c.second = s.at("question").at(1).get<TrajectoryId>();
        c.info_gain = s.at("info_gain").get<double>();
        c.reveal_score = s.at("reveal_score").get<double>();
        c.combined = s.at("combined").get<double>();
        out.push_back(c);
    }
    return out;
}

Json points_json(const std::vector<Point>& points) {
    Json out = Json::array();
    for (const Point& p : points) {
        out.push_back(p);
    }
    return out;
}

}  // namespace

std::string to_string(SessionStatus s) {
    switch (s) {
        case SessionStatus::Active:
            return "active";
        case SessionStatus::Deployed:
            return "deployed";
        case SessionStatus::Expired:
            return "expired";
    }
    return "unknown";
}

SessionStatus parse_session_status(const std::string& s) {
    if (s == "active") return SessionStatus::Active;
    if (s == "deployed") return SessionStatus::Deployed;
    if (s == "expired") return SessionStatus::Expired;
    throw ValidationError("unknown session status '" + s + "'");
}

void SessionSettings::validate() const {
    if (environment != "tabletop" && environment != "driving" && environment != "synthetic") {
        throw ValidationError("environment must be tabletop, driving or synthetic");
    }
    if (pool_size < 2) throw ValidationError("pool_size must be at least 2");
    if (dim < 1) throw ValidationError("dim must be at least 1");
    try {
        strategy.validate();
    } catch (const ConfigError& e) {
        throw ValidationError(e.what());
    }
}

SessionSettings session_settings_from_json(const Json& body) {
    if (!body.is_object()) {
        throw ValidationError("request body must be a JSON object");
    }
    for (auto it = body.begin(); it != body.end(); ++it) {
        const std::string& k = it.key();
        if (k != "environment" && k != "strategy" && k != "lambda" && k != "k" && k != "seed" && k != "pool_size" &&
            k != "dim") {
            throw ValidationError("unknown field '" + k + "'");
        }
    }
    SessionSettings s;
    auto env = body.find("environment");
    if (env == body.end() || !env->is_string()) {
        throw ValidationError("environment is required and must be a string");
    }
    s.environment = env->get<std::string>();
    if (auto it = body.find("strategy"); it != body.end()) {
        if (!it->is_string()) throw ValidationError("strategy must be a string");
        s.strategy.strategy = parse_strategy(it->get<std::string>());
    }
    if (auto it = body.find("lambda"); it != body.end()) {
        if (!it->is_number()) throw ValidationError("lambda must be a number");
        s.strategy.lambda = it->get<double>();
    }
    if (auto it = body.find("k"); it != body.end()) {
        s.strategy.model_memory = get_unsigned(body, "k", "session");
    }
    if (auto it = body.find("seed"); it != body.end()) {
        s.seed = get_unsigned(body, "seed", "session");
    }
    if (auto it = body.find("pool_size"); it != body.end()) {
        s.pool_size = get_unsigned(body, "pool_size", "session");
    }
    if (auto it = body.find("dim"); it != body.end()) {
        s.dim = get_unsigned(body, "dim", "session");
    }
    s.validate();
    return s;
}

Json to_json(const SessionEvent& e) {
    Json j{{"type", event_type_name(e.type)}};
    if (e.type == SessionEvent::Type::Question || e.type == SessionEvent::Type::Answer) {
        j["index"] = e.index;
    }
    if (e.type == SessionEvent::Type::Question) {
        j["trajectories"] = e.trajectories;
    }
    if (e.type == SessionEvent::Type::Answer) {
        j["answer"] = to_json(*e.answer);
    }
    j["at"] = e.at;
    return j;
}

SessionEvent session_event_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
        throw ValidationError("event.type is required");
    }
    SessionEvent e;
    const std::string type = j["type"].get<std::string>();
    if (type == "question") {
        e.type = SessionEvent::Type::Question;
        e.index = get_unsigned(j, "index", "event");
        if (!j.contains("trajectories") || !j["trajectories"].is_array()) {
            throw ValidationError("event.trajectories must be an array of ids");
        }
        for (const Json& id : j["trajectories"]) {
            if (!is_non_negative_integer(id)) throw ValidationError("event.trajectories must be an array of ids");
            e.trajectories.push_back(id.get<TrajectoryId>());
        }
    } else if (type == "answer") {
        e.type = SessionEvent::Type::Answer;
        e.index = get_unsigned(j, "index", "event");
        if (!j.contains("answer")) throw ValidationError("event.answer is required");
        e.answer = answer_from_json(j["answer"]);
    } else if (type == "deploy") {
        e.type = SessionEvent::Type::Deploy;
    } else if (type == "expire") {
        e.type = SessionEvent::Type::Expire;
    } else {
        throw ValidationError("unknown event type '" + type + "'");
    }
    e.at = get_time(j, "at", "event");
    return e;
}

Session Session::create(std::string id, SessionSettings settings, SessionLimits limits, std::int64_t now) {
    settings.validate();
    if (limits.max_rounds < 1) throw ConfigError("max_rounds must be at least 1");
    if (limits.candidates < 1) throw ConfigError("candidates must be at least 1");

    Session s;
    s.id_ = std::move(id);
    s.settings_ = std::move(settings);
    s.settings_.strategy.candidate_count = limits.candidates;
    s.limits_ = limits;

    Rng env_rng(environment_seed(s.settings_.seed));
    s.env_ = std::make_shared<const Environment>(
        build_environment(s.settings_.environment, s.settings_.pool_size, s.settings_.dim, env_rng));

    // A session draws from the same streams as simulated user 0 of the same seed.
    const UserSeeds seeds = UserSeeds::derive(s.settings_.seed, 0);
    Rng robot_rng(seeds.robot_belief);
    Rng human_rng(seeds.human_belief);
    s.belief_ = init_belief(s.env_->dim(), limits.particles, robot_rng);
    s.human_model_ =
        init_human_belief(s.env_->dim(), limits.human_candidates, s.settings_.strategy.model_memory, human_rng);
    s.created_at_ = now;
    s.updated_at_ = now;
    return s;
}

void Session::apply(const SessionEvent& e) {
    switch (e.type) {
        case SessionEvent::Type::Question: {
            if (pending_) throw ConflictError("question " + std::to_string(pending_->index()) + " is still pending");
            if (e.index != answered_ + 1) {
                throw ValidationError("question event index " + std::to_string(e.index) + " out of sequence");
            }
            std::vector<Trajectory> ts;
            for (TrajectoryId id : e.trajectories) {
                if (id >= env_->pool.size() || env_->pool[id].id() != id) {
                    throw ValidationError("trajectory " + std::to_string(id) + " is not in the session's pool");
                }
                ts.push_back(env_->pool[id]);
            }
            if (ts.size() != 2) {
                throw ValidationError("questions must show exactly two trajectories");
            }
            Question q(std::move(ts), e.index);
            human_model_ = observe_question(human_model_, q);
            pending_ = std::move(q);
            break;
        }
        case SessionEvent::Type::Answer: {
            if (!pending_ || pending_->index() != e.index) {
                throw ValidationError("answer event for question " + std::to_string(e.index) + " has no matching question");
            }
            belief_ = update_belief(belief_, *pending_, *e.answer);
            pending_.reset();
            ++answered_;
            break;
        }
        case SessionEvent::Type::Deploy:
            status_ = SessionStatus::Deployed;
            break;
        case SessionEvent::Type::Expire:
            status_ = SessionStatus::Expired;
            break;
    }
}

void Session::record(SessionEvent e, std::int64_t now) {
    e.at = now;
    apply(e);
    events_.push_back(std::move(e));
    updated_at_ = now;
    ++revision_;
}

void Session::require_active(const char* action) const {
    if (status_ != SessionStatus::Active) {
        throw ConflictError("session is " + to_string(status_) + "; cannot " + action);
    }
}

LearningSummary Session::z_star() const { return learning_summary(belief_, env_->pool); }

const Trajectory& Session::preview() const { return env_->pool[learned_trajectory(belief_, env_->pool).index]; }

std::optional<Question> Session::next_question(std::int64_t now) {
    require_active("ask a question");
    if (pending_) {
        return pending_;
    }
    if (complete()) {
        return std::nullopt;
    }
    const std::uint64_t round = answered_ + 1;
    const UserSeeds seeds = UserSeeds::derive(settings_.seed, 0);
    Rng candidate_rng(derive_seed(seeds.candidates, {round}));
    Rng selection_rng(derive_seed(seeds.selection, {round}));
    const std::vector<Question> candidates = candidate_questions(env_->pool, limits_.candidates, candidate_rng);
    const Selection sel = select_question(candidates, belief_, human_model_, z_star(), settings_.strategy, selection_rng);

    last_scores_.clear();
    for (std::size_t i = 0; i < sel.scored.size(); ++i) {
        const ScoredQuestion& s = sel.scored[i];
        last_scores_.push_back({i, s.question.at(0).id(), s.question.at(1).id(), s.info_gain, s.reveal_score, s.combined});
    }
    const Question& chosen = sel.chosen().question;
    SessionEvent e;
    e.type = SessionEvent::Type::Question;
    e.index = answered_ + 1;
    e.trajectories = {chosen.at(0).id(), chosen.at(1).id()};
    record(std::move(e), now);
    return pending_;
}

const Question& Session::pose(const std::vector<TrajectoryId>& ids, std::int64_t now) {
    require_active("ask a question");
    if (pending_) {
        throw ConflictError("question " + std::to_string(pending_->index()) + " is still pending");
    }
    if (complete()) {
        throw ConflictError("session has reached its " + std::to_string(limits_.max_rounds) + "-question limit");
    }
    SessionEvent e;
    e.type = SessionEvent::Type::Question;
    e.index = answered_ + 1;
    e.trajectories = ids;
    record(std::move(e), now);
    last_scores_.clear();
    return *pending_;
}

void Session::submit_answer(std::size_t index, const Answer& answer, std::int64_t now) {
    require_active("answer");
    if (!pending_) {
        throw ConflictError(index <= answered_ ? "question " + std::to_string(index) + " was already answered"
                                               : "no question is pending");
    }
    if (index != pending_->index()) {
        throw ConflictError("stale question index " + std::to_string(index) + "; pending question is " +
                            std::to_string(pending_->index()));
    }
    try {
        answer.validate_for(*pending_);
    } catch (const ContractViolation& e) {
        throw ValidationError(e.what());
    }
    SessionEvent e;
    e.type = SessionEvent::Type::Answer;
    e.index = index;
    e.answer = answer;
    record(std::move(e), now);
}

void Session::deploy(std::int64_t now) {
    require_active("deploy");
    SessionEvent e;
    e.type = SessionEvent::Type::Deploy;
    record(std::move(e), now);
}

bool Session::expire_if_idle(std::int64_t now, std::int64_t ttl_seconds) {
    if (status_ != SessionStatus::Active || ttl_seconds <= 0 || now - updated_at_ <= ttl_seconds) {
        return false;
    }
    SessionEvent e;
    e.type = SessionEvent::Type::Expire;
    record(std::move(e), now);
    return true;
}

Json Session::question_payload(const Question& q) const {
    Json trajectories = Json::array();
    for (const Trajectory& t : q.trajectories()) {
        trajectories.push_back(to_json(t));
    }
    return Json{{"index", q.index()},
                {"trajectories", std::move(trajectories)},
                {"scene", env_->scene ? to_json(*env_->scene) : Json(nullptr)},
                {"feature_names", env_->feature_names},
                {"max_rounds", limits_.max_rounds}};
}

Json Session::belief_payload() const {
    const Trajectory& learned = preview();
    return Json{{"z_star", to_json(z_star(), env_->feature_names)},
                {"preview_waypoints", points_json(learned.waypoints())},
                {"preview_id", learned.id()},
                {"round", answered_},
                {"max_rounds", limits_.max_rounds},
                {"complete", complete()},
                {"status", to_string(status_)}};
}

Json Session::debug_payload() const {
    return Json{{"human_model", human_belief_summary(human_model_, env_->feature_names)},
                {"z_star", to_json(z_star(), env_->feature_names)},
                {"strategy", to_json(settings_.strategy)},
                {"last_scores", scores_to_json(last_scores_)}};
}

Json Session::state_payload() const {
    return Json{{"session_id", id_},
                {"status", to_string(status_)},
                {"round", answered_},
                {"max_rounds", limits_.max_rounds},
                {"pending_index", pending_ ? Json(pending_->index()) : Json(nullptr)},
                {"complete", complete()},
                {"settings", settings_json(settings_)}};
}

Json Session::snapshot() const {
    Json events = Json::array();
    for (const SessionEvent& e : events_) {
        events.push_back(to_json(e));
    }
    return Json{{"version", 1},
                {"id", id_},
                {"status", to_string(status_)},
                {"created_at", created_at_},
                {"updated_at", updated_at_},
                {"settings", settings_json(settings_)},
                {"limits", limits_json(limits_)},
                {"events", std::move(events)},
                {"belief", to_json(belief_)},
                {"last_scores", scores_to_json(last_scores_)}};
}

Session Session::from_snapshot(const Json& snap) {
    if (!snap.is_object() || !snap.contains("id") || !snap["id"].is_string()) {
        throw ValidationError("snapshot.id is required");
    }
    if (!snap.contains("settings") || !snap.contains("limits") || !snap.contains("events") || !snap.contains("belief")) {
        throw ValidationError("snapshot is missing settings, limits, events or belief");
    }
    const Json& st = snap["settings"];
    Json body{{"environment", st.value("environment", "")},
              {"strategy", st.value("strategy", "combined")},
              {"lambda", st.value("lambda", 1.0)},
              {"k", st.value("k", std::uint64_t{3})},
              {"seed", st.value("seed", std::uint64_t{1})},
              {"pool_size", st.value("pool_size", std::uint64_t{100})},
              {"dim", st.value("dim", std::uint64_t{3})}};
    Session s = create(snap["id"].get<std::string>(), session_settings_from_json(body), limits_from_json(snap["limits"]),
                       get_time(snap, "created_at", "snapshot"));
    for (const Json& ej : snap["events"]) {
        SessionEvent e = session_event_from_json(ej);
        s.apply(e);
        s.events_.push_back(std::move(e));
    }
    s.updated_at_ = get_time(snap, "updated_at", "snapshot");
    s.revision_ = s.events_.size();
    if (to_json(s.belief_) != snap["belief"]) {
        throw ValidationError("event log replay does not reproduce the stored belief for session " + s.id_);
    }
    if (snap.contains("status") && parse_session_status(snap["status"].get<std::string>()) != s.status_) {
        throw ValidationError("event log replay does not reproduce the stored status for session " + s.id_);
    }
    if (snap.contains("last_scores")) {
        s.last_scores_ = scores_from_json(snap["last_scores"]);
    }
    return s;
}

std::int64_t unix_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

SessionStore::SessionStore(std::filesystem::path dir, SessionLimits limits, std::int64_t ttl_seconds)
    : dir_(std::move(dir)), limits_(limits), ttl_seconds_(ttl_seconds), id_state_(std::random_device{}()) {
    id_state_ = (id_state_ << 32) ^ std::random_device{}() ^ static_cast<std::uint64_t>(unix_now());
    std::filesystem::create_directories(dir_);
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") {
            continue;
        }
        try {
            std::ifstream in(entry.path(), std::ios::binary);
            const Json snap = Json::parse(in);
            Session s = Session::from_snapshot(snap);
            std::string id = s.id();
            sessions_.emplace(std::move(id), std::make_shared<Slot>(std::move(s)));
        } catch (const std::exception& e) {
            load_errors_.push_back(entry.path().filename().string() + ": " + e.what());
        }
    }
}

std::size_t SessionStore::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return sessions_.size();
}

std::filesystem::path SessionStore::path_for(const std::string& id) const { return dir_ / (id + ".json"); }

std::string SessionStore::create(const SessionSettings& settings) {
    std::lock_guard<std::mutex> lock(mutex_);
    std::string id;
    do {
        id_state_ = splitmix64(id_state_);
        std::ostringstream s;
        s << std::hex << std::setw(16) << std::setfill('0') << id_state_;
        id = s.str();
    } while (sessions_.count(id) != 0 || std::filesystem::exists(path_for(id)));

    auto slot = std::make_shared<Slot>(Session::create(id, settings, limits_, unix_now()));
    persist(slot->session);
    sessions_.emplace(id, std::move(slot));
    return id;
}

std::shared_ptr<SessionStore::Slot> SessionStore::find(const std::string& id) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) {
        throw NotFoundError("no session '" + id + "'");
    }
    return it->second;
}

void SessionStore::persist(const Session& s) const {
    const std::filesystem::path target = path_for(s.id());
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("storage_error", "cannot write " + tmp.string());
        }
        out << s.snapshot().dump() << '\n';
        if (!out) {
            throw Error("storage_error", "failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, target);
}

}  // namespace revealq
