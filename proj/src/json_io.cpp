#include "revealq/json_io.hpp"

#include <cmath>
#include <iterator>
#include <map>
#include <set>

#include "revealq/errors.hpp"

namespace revealq {
namespace {

const Json& field(const Json& j, const char* name, const std::string& where) {
    if (!j.is_object()) {
        throw ValidationError(where + " must be an object");
    }
    auto it = j.find(name);
    if (it == j.end()) {
        throw ValidationError(where + " is missing field '" + name + "'");
    }
    return *it;
}

std::vector<double> number_array(const Json& j, const std::string& where) {
    if (!j.is_array()) {
        throw ValidationError(where + " must be an array of numbers");
    }
    std::vector<double> out;
    out.reserve(j.size());
    for (const Json& v : j) {
        if (!v.is_number()) {
            throw ValidationError(where + " must be an array of numbers");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

std::uint64_t unsigned_value(const Json& j, const std::string& where) {
    if (!is_non_negative_integer(j)) {
        throw ValidationError(where + " must be a non-negative integer");
    }
    return j.get<std::uint64_t>();
}

Json points_json(const std::vector<Point>& points) {
    Json out = Json::array();
    for (const Point& p : points) {
        out.push_back(p);
    }
    return out;
}

// ---- line anchoring for config diagnostics ----

// Char iterator that counts newlines as the parser consumes input.
struct LineCounter {
    std::size_t newlines = 0;
    char last = '\0';
    std::size_t line() const { return newlines + 1 - (last == '\n' ? 1 : 0); }
};

class CountingIterator {
public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = char;
    using difference_type = std::ptrdiff_t;
    using pointer = const char*;
    using reference = const char&;

    CountingIterator() = default;
    CountingIterator(const char* p, LineCounter* counter) : p_(p), counter_(counter) {}

    reference operator*() const { return *p_; }
    CountingIterator& operator++() {
        if (counter_ != nullptr) {
            counter_->last = *p_;
            if (*p_ == '\n') {
                ++counter_->newlines;
            }
        }
        ++p_;
        return *this;
    }
    CountingIterator operator++(int) {
        CountingIterator copy = *this;
        ++*this;
        return copy;
    }
    bool operator==(const CountingIterator& o) const { return p_ == o.p_; }

private:
    const char* p_ = nullptr;
    LineCounter* counter_ = nullptr;
};

// SAX handler recording the line on which each JSON path starts.
class PathLines : public nlohmann::json_sax<nlohmann::json> {
public:
    explicit PathLines(const LineCounter& counter) : counter_(counter) {}

    std::map<std::string, std::size_t> lines;

    bool null() override { return value(); }
    bool boolean(bool) override { return value(); }
    bool number_integer(number_integer_t) override { return value(); }
    bool number_unsigned(number_unsigned_t) override { return value(); }
    bool number_float(number_float_t, const string_t&) override { return value(); }
    bool string(string_t&) override { return value(); }
    bool binary(binary_t&) override { return value(); }

    bool start_object(std::size_t) override {
        value();
        stack_.push_back({false, 0, path_});
        return true;
    }
    bool key(string_t& k) override {
        const std::string& parent = stack_.back().path;
        path_ = parent.empty() ? k : parent + "." + k;
        lines.emplace(path_, counter_.line());
        return true;
    }
    bool end_object() override { return close(); }
    bool start_array(std::size_t) override {
        value();
        stack_.push_back({true, 0, path_});
        return true;
    }
    bool end_array() override { return close(); }
    bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override { return false; }

private:
    struct Frame {
        bool array;
        std::size_t next;
        std::string path;
    };

    // Assigns a path to array elements and records the line of every value start.
    bool value() {
        if (!stack_.empty() && stack_.back().array) {
            Frame& f = stack_.back();
            path_ = f.path + "[" + std::to_string(f.next++) + "]";
            lines.emplace(path_, counter_.line());
        } else if (stack_.empty()) {
            lines.emplace("", counter_.line());
        }
        return true;
    }
    bool close() {
        stack_.pop_back();
        path_ = stack_.empty() ? "" : stack_.back().path;
        return true;
    }

    const LineCounter& counter_;
    std::vector<Frame> stack_;
    std::string path_;
};

class ConfigReader {
public:
    ConfigReader(const std::string& text, std::string source) : source_(std::move(source)) {
        LineCounter counter;
        PathLines handler(counter);
        nlohmann::json::sax_parse(CountingIterator(text.data(), &counter),
                                  CountingIterator(text.data() + text.size(), nullptr), &handler);
        lines_ = std::move(handler.lines);
    }

    [[noreturn]] void fail(const std::string& path, const std::string& message) const {
        throw ConfigError(source_ + ":" + std::to_string(line_of(path)) + ": " + (path.empty() ? "" : path + ": ") +
                          message);
    }

    std::size_t line_of(std::string path) const {
        for (;;) {
            auto it = lines_.find(path);
            if (it != lines_.end()) {
                return it->second;
            }
            const std::size_t cut = path.find_last_of(".[");
            if (cut == std::string::npos) {
                if (path.empty()) {
                    return 1;
                }
                path.clear();
            } else {
                path.resize(cut);
            }
        }
    }

    std::size_t count(const Json& j, const std::string& path, std::size_t min) const {
        if (!is_non_negative_integer(j)) {
            fail(path, "must be a non-negative integer");
        }
        const std::uint64_t v = j.get<std::uint64_t>();
        if (v < min) {
            fail(path, "must be at least " + std::to_string(min));
        }
        return static_cast<std::size_t>(v);
    }

    std::string text(const Json& j, const std::string& path) const {
        if (!j.is_string()) {
            fail(path, "must be a string");
        }
        return j.get<std::string>();
    }

    void only_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) const {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            bool known = false;
            for (const char* a : allowed) {
                known = known || it.key() == a;
            }
            if (!known) {
                fail(path.empty() ? it.key() : path + "." + it.key(), "unknown field");
            }
        }
    }

private:
    std::string source_;
    std::map<std::string, std::size_t> lines_;
};

SelectionConfig parse_strategy_entry(const ConfigReader& r, const Json& j, const std::string& path) {
    SelectionConfig s;
    try {
        if (j.is_string()) {
            s.strategy = parse_strategy(j.get<std::string>());
            return s;
        }
        if (!j.is_object()) {
            r.fail(path, "must be a strategy name or an object");
        }
        r.only_keys(j, path, {"strategy", "lambda", "model_memory", "label"});
        if (!j.contains("strategy")) {
            r.fail(path + ".strategy", "is required");
        }
        s.strategy = parse_strategy(r.text(j["strategy"], path + ".strategy"));
    } catch (const ValidationError& e) {
        r.fail(path + ".strategy", e.what());
    }
    if (j.contains("lambda")) {
        if (!j["lambda"].is_number()) {
            r.fail(path + ".lambda", "must be a number");
        }
        s.lambda = j["lambda"].get<double>();
        if (!(s.lambda >= 0.0) || !std::isfinite(s.lambda)) {
            r.fail(path + ".lambda", "must be a finite non-negative number");
        }
    }
    if (j.contains("model_memory")) {
        s.model_memory = r.count(j["model_memory"], path + ".model_memory", 1);
    }
    if (j.contains("label")) {
        s.label = r.text(j["label"], path + ".label");
    }
    return s;
}

std::vector<SelectionConfig> default_strategies() {
    std::vector<SelectionConfig> out;
    for (Strategy s : {Strategy::Random, Strategy::Informative, Strategy::Revealing, Strategy::Combined}) {
        SelectionConfig c;
        c.strategy = s;
        out.push_back(c);
    }
    return out;
}

}  // namespace

bool is_non_negative_integer(const Json& j) {
    return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}

Json to_json(const Trajectory& t) {
    return Json{{"id", t.id()}, {"features", t.features()}, {"waypoints", points_json(t.waypoints())}};
}

Trajectory trajectory_from_json(const Json& j) {
    const std::uint64_t id = unsigned_value(field(j, "id", "trajectory"), "trajectory.id");
    std::vector<Point> waypoints;
    if (auto it = j.find("waypoints"); it != j.end()) {
        if (!it->is_array()) {
            throw ValidationError("trajectory.waypoints must be an array");
        }
        for (const Json& p : *it) {
            waypoints.push_back(number_array(p, "trajectory.waypoints[]"));
        }
    }
    return Trajectory(static_cast<TrajectoryId>(id), number_array(field(j, "features", "trajectory"), "trajectory.features"),
                      std::move(waypoints));
}

Json to_json(const Question& q) {
    Json trajectories = Json::array();
    for (const Trajectory& t : q.trajectories()) {
        trajectories.push_back(to_json(t));
    }
    return Json{{"index", q.index()}, {"trajectories", std::move(trajectories)}};
}

Question question_from_json(const Json& j) {
    const Json& list = field(j, "trajectories", "question");
    if (!list.is_array()) {
        throw ValidationError("question.trajectories must be an array");
    }
    std::vector<Trajectory> ts;
    for (const Json& t : list) {
        ts.push_back(trajectory_from_json(t));
    }
    std::size_t index = 0;
    if (auto it = j.find("index"); it != j.end()) {
        index = static_cast<std::size_t>(unsigned_value(*it, "question.index"));
    }
    try {
        return Question(std::move(ts), index);
    } catch (const ContractViolation& e) {
        throw ValidationError(std::string("question: ") + e.what());
    }
}

Json to_json(const Answer& a) {
    if (a.is_idk()) {
        return Json{{"kind", "idk"}};
    }
    return Json{{"kind", "choice"}, {"slot", a.slot()}};
}

Answer answer_from_json(const Json& j) {
    const Json& kind = field(j, "kind", "answer");
    if (!kind.is_string()) {
        throw ValidationError("answer.kind must be \"choice\" or \"idk\"");
    }
    const std::string k = kind.get<std::string>();
    if (k == "idk") {
        return Answer::idk();
    }
    if (k != "choice") {
        throw ValidationError("answer.kind must be \"choice\" or \"idk\", got \"" + k + "\"");
    }
    auto it = j.find("slot");
    if (it == j.end()) {
        throw ValidationError("answer.slot is required when kind is \"choice\"");
    }
    return Answer::choice(static_cast<std::size_t>(unsigned_value(*it, "answer.slot")));
}

Json to_json(const RobotBelief& b) {
    Json particles = Json::array();
    for (const Preferences& p : b.particles) {
        particles.push_back(p.theta());
    }
    return Json{{"particles", std::move(particles)},
                {"particle_ids", b.particle_ids},
                {"weights", b.weights},
                {"generation", b.generation},
                {"seed", b.seed},
                {"next_particle_id", b.next_particle_id}};
}

RobotBelief belief_from_json(const Json& j) {
    RobotBelief b;
    const Json& particles = field(j, "particles", "belief");
    if (!particles.is_array() || particles.empty()) {
        throw ValidationError("belief.particles must be a non-empty array");
    }
    for (const Json& p : particles) {
        try {
            b.particles.emplace_back(number_array(p, "belief.particles[]"));
        } catch (const ContractViolation& e) {
            throw ValidationError(std::string("belief.particles: ") + e.what());
        }
    }
    const Json& ids = field(j, "particle_ids", "belief");
    if (!ids.is_array()) {
        throw ValidationError("belief.particle_ids must be an array");
    }
    for (const Json& id : ids) {
        b.particle_ids.push_back(unsigned_value(id, "belief.particle_ids[]"));
    }
    b.weights = number_array(field(j, "weights", "belief"), "belief.weights");
    b.generation = unsigned_value(field(j, "generation", "belief"), "belief.generation");
    b.seed = unsigned_value(field(j, "seed", "belief"), "belief.seed");
    b.next_particle_id = unsigned_value(field(j, "next_particle_id", "belief"), "belief.next_particle_id");
    if (b.particle_ids.size() != b.particles.size() || b.weights.size() != b.particles.size()) {
        throw ValidationError("belief particles, particle_ids and weights differ in length");
    }
    for (const Preferences& p : b.particles) {
        if (p.dim() != b.particles.front().dim()) {
            throw ValidationError("belief particles differ in dimension");
        }
    }
    return b;
}

Json to_json(const LearningSummary& z, const std::vector<std::string>& feature_names) {
    return Json{{"features", feature_names}, {"mu", z.mu}, {"sigma", z.sigma}};
}

Json human_belief_summary(const HumanBelief& b, const std::vector<std::string>& feature_names) {
    const std::vector<double> mean = posterior_mean_summary(b);
    const LearningSummary z = LearningSummary::from_vector(mean);
    Json window = Json::array();
    for (const QuestionStats& s : b.window) {
        window.push_back(Json{{"mu_q", s.mu_q}, {"sigma_q", s.sigma_q}});
    }
    return Json{{"posterior_mean", to_json(z, feature_names)},
                {"entropy", weight_entropy(b)},
                {"candidates", b.size()},
                {"memory", b.memory},
                {"window", std::move(window)}};
}

Json to_json(const Scene& s) {
    Json landmarks = Json::array();
    for (const Landmark& l : s.landmarks) {
        landmarks.push_back(Json{{"name", l.name}, {"x", l.x}, {"y", l.y}, {"radius", l.radius}});
    }
    Json parameters = Json::object();
    for (const auto& [name, value] : s.parameters) {
        parameters[name] = value;
    }
    return Json{{"landmarks", std::move(landmarks)}, {"parameters", std::move(parameters)}};
}

Json to_json(const Environment& env) {
    Json pool = Json::array();
    for (const Trajectory& t : env.pool) {
        pool.push_back(to_json(t));
    }
    Json scale = nullptr;
    if (env.scale) {
        scale = Json{{"lo", env.scale->lo}, {"hi", env.scale->hi}};
    }
    return Json{{"name", env.name},
                {"feature_names", env.feature_names},
                {"scene", env.scene ? to_json(*env.scene) : Json(nullptr)},
                {"scale", std::move(scale)},
                {"pool", std::move(pool)}};
}

Json to_json(const SelectionConfig& s) {
    Json j{{"strategy", to_string(s.strategy)}, {"lambda", s.lambda}, {"model_memory", s.model_memory}};
    j["label"] = s.display_name();
    return j;
}

Json to_json(const ExperimentConfig& c) {
    Json strategies = Json::array();
    for (const SelectionConfig& s : c.strategies) {
        strategies.push_back(to_json(s));
    }
    return Json{{"environment",
                 Json{{"name", c.environment.name}, {"pool_size", c.environment.pool_size}, {"dim", c.environment.dim}}},
                {"users", c.users},
                {"rounds", c.rounds},
                {"candidates", c.candidates},
                {"strategies", std::move(strategies)},
                {"particles", c.particles},
                {"human_candidates", c.human_candidates},
                {"memory", c.memory},
                {"teacher", to_string(c.teacher)},
                {"seed", c.seed},
                {"parallelism", c.parallelism},
                {"dump_scores", c.dump_scores}};
}

Json to_json(const RoundRecord& r) {
    Json answer = r.chosen_slot ? to_json(Answer::choice(*r.chosen_slot)) : to_json(Answer::idk());
    return Json{{"user", r.user},
                {"round", r.round},
                {"strategy", r.strategy},
                {"question", Json::array({r.first, r.second})},
                {"answer", std::move(answer)},
                {"answered_idk", r.answered_idk},
                {"human_error", r.human_error},
                {"regret", r.regret},
                {"info_gain", r.info_gain},
                {"reveal_score", r.reveal_score},
                {"convergence", r.convergence},
                {"convergence_fallback", r.convergence_fallback}};
}

Json scores_json(const RoundRecord& r) {
    Json candidates = Json::array();
    for (const CandidateScore& s : r.scores) {
        candidates.push_back(Json{{"candidate", s.candidate},
                                  {"question", Json::array({s.first, s.second})},
                                  {"info_gain", s.info_gain},
                                  {"reveal_score", s.reveal_score},
                                  {"combined", s.combined}});
    }
    return Json{{"user", r.user}, {"round", r.round}, {"strategy", r.strategy}, {"candidates", std::move(candidates)}};
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source) {
    Json root;
    try {
        root = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n');
        throw ConfigError(source + ":" + std::to_string(line) + ": invalid JSON: " + e.what());
    }
    const ConfigReader r(text, source);
    if (!root.is_object()) {
        r.fail("", "config must be a JSON object");
    }
    r.only_keys(root, "",
                {"environment", "users", "rounds", "candidates", "strategies", "particles", "human_candidates",
                 "memory", "teacher", "seed", "parallelism", "dump_scores"});

    ExperimentConfig c;
    if (!root.contains("environment")) {
        r.fail("environment", "required field is missing");
    }
    const Json& env = root["environment"];
    if (env.is_string()) {
        c.environment.name = env.get<std::string>();
    } else if (env.is_object()) {
        r.only_keys(env, "environment", {"name", "pool_size", "dim"});
        if (!env.contains("name")) {
            r.fail("environment.name", "required field is missing");
        }
        c.environment.name = r.text(env["name"], "environment.name");
        if (env.contains("pool_size")) c.environment.pool_size = r.count(env["pool_size"], "environment.pool_size", 2);
        if (env.contains("dim")) c.environment.dim = r.count(env["dim"], "environment.dim", 1);
    } else {
        r.fail("environment", "must be an environment name or an object");
    }
    const std::string env_path = env.is_string() ? "environment" : "environment.name";
    if (c.environment.name != "tabletop" && c.environment.name != "driving" && c.environment.name != "synthetic") {
        r.fail(env_path, "unknown environment '" + c.environment.name + "' (expected tabletop, driving or synthetic)");
    }

    if (root.contains("users")) c.users = r.count(root["users"], "users", 1);
    if (root.contains("rounds")) c.rounds = r.count(root["rounds"], "rounds", 1);
    if (root.contains("candidates")) c.candidates = r.count(root["candidates"], "candidates", 1);
    if (root.contains("particles")) c.particles = r.count(root["particles"], "particles", 2);
    if (root.contains("human_candidates")) c.human_candidates = r.count(root["human_candidates"], "human_candidates", 2);
    if (root.contains("memory")) c.memory = r.count(root["memory"], "memory", 1);
    if (root.contains("parallelism")) c.parallelism = r.count(root["parallelism"], "parallelism", 0);
    if (root.contains("seed")) {
        if (!is_non_negative_integer(root["seed"])) {
            r.fail("seed", "must be a non-negative integer");
        }
        c.seed = root["seed"].get<std::uint64_t>();
    }
    if (root.contains("teacher")) {
        try {
            c.teacher = parse_teacher(r.text(root["teacher"], "teacher"));
        } catch (const ValidationError& e) {
            r.fail("teacher", e.what());
        }
    }
    if (root.contains("dump_scores")) {
        if (!root["dump_scores"].is_boolean()) {
            r.fail("dump_scores", "must be true or false");
        }
        c.dump_scores = root["dump_scores"].get<bool>();
    }

    if (root.contains("strategies")) {
        const Json& list = root["strategies"];
        if (!list.is_array() || list.empty()) {
            r.fail("strategies", "must be a non-empty array");
        }
        std::set<std::string> seen;
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string path = "strategies[" + std::to_string(i) + "]";
            SelectionConfig s = parse_strategy_entry(r, list[i], path);
            if (!seen.insert(s.display_name()).second) {
                r.fail(path, "duplicate strategy label '" + s.display_name() + "'");
            }
            c.strategies.push_back(std::move(s));
        }
    } else {
        c.strategies = default_strategies();
    }

    try {
        c.validate();
    } catch (const ConfigError& e) {
        r.fail("", e.what());
    }
    return c;
}

}  // namespace revealq
