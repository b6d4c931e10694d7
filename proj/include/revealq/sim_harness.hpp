#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "revealq/core.hpp"
#include "revealq/environments.hpp"
#include "revealq/human_model.hpp"
#include "revealq/question_select.hpp"
#include "revealq/robot_belief.hpp"

namespace revealq {

// How the simulated teacher answers. Noisy draws from the pairwise answer
// model; Rational always names the higher-reward trajectory ("I don't know"
// only on exact ties).
enum class Teacher { Noisy, Rational };

std::string to_string(Teacher t);
Teacher parse_teacher(const std::string& name);

struct EnvironmentSpec {
    std::string name;
    std::size_t pool_size = 100;
    std::size_t dim = 3;  // synthetic only
};

struct ExperimentConfig {
    EnvironmentSpec environment;
    std::size_t users = 100;
    std::size_t rounds = 20;
    std::size_t candidates = 100;
    std::vector<SelectionConfig> strategies;
    std::size_t particles = 200;         // M
    std::size_t human_candidates = 500;  // L
    std::size_t memory = 3;              // k of the simulated observer
    Teacher teacher = Teacher::Noisy;
    std::uint64_t seed = 1;
    std::size_t parallelism = 0;  // 0: hardware concurrency
    bool dump_scores = false;

    void validate() const;
};

// Seeds for one simulated user, derived from the base seed and the user index
// only, so every strategy sees the same preferences, priors, candidate sets
// and answer noise stream.
struct UserSeeds {
    std::uint64_t environment = 0;
    std::uint64_t true_prefs = 0;
    std::uint64_t robot_belief = 0;
    std::uint64_t human_belief = 0;
    std::uint64_t candidates = 0;
    std::uint64_t answers = 0;
    std::uint64_t selection = 0;

    static UserSeeds derive(std::uint64_t base_seed, std::size_t user);
};

std::uint64_t environment_seed(std::uint64_t base_seed);

struct CandidateScore {
    std::size_t candidate = 0;
    TrajectoryId first = 0;
    TrajectoryId second = 0;
    double info_gain = 0.0;
    double reveal_score = 0.0;
    double combined = 0.0;
};

struct RoundRecord {
    std::size_t user = 0;
    std::size_t round = 0;  // 1-based
    std::string strategy;
    double human_error = 0.0;
    double regret = 0.0;
    bool answered_idk = false;
    double info_gain = 0.0;
    double reveal_score = 0.0;
    double convergence = 0.0;
    bool convergence_fallback = false;
    TrajectoryId first = 0;
    TrajectoryId second = 0;
    std::optional<std::size_t> chosen_slot;
    std::vector<CandidateScore> scores;  // filled only when dumping scores
};

// Everything a user's run starts from.
struct UserStart {
    Preferences true_prefs;
    RobotBelief robot;
    HumanBelief observer;     // simulated teacher's memory model (config.memory)
    HumanBelief robot_model;  // the robot's own copy (strategy.model_memory)
};

Preferences draw_true_prefs(std::size_t d, std::uint64_t seed);

UserStart make_user_start(const Environment& env, const SelectionConfig& strategy, const ExperimentConfig& config,
                          const UserSeeds& seeds);

struct UserRunOptions {
    std::size_t rounds = 20;
    std::size_t candidates = 100;
    Teacher teacher = Teacher::Noisy;
    bool dump_scores = false;
    std::size_t user = 0;
};

std::vector<RoundRecord> run_user(const Environment& env, const SelectionConfig& strategy, UserStart start,
                                  const UserSeeds& seeds, const UserRunOptions& options);

struct AggregateRow {
    std::string strategy;
    std::size_t round = 0;
    std::string metric;
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation across users
    std::size_t n = 0;
};

struct CellFailure {
    std::string strategy;
    std::size_t user = 0;
    std::string message;
};

struct ExperimentResult {
    std::vector<RoundRecord> records;  // ordered by (strategy, user, round)
    std::vector<AggregateRow> aggregate;
    std::vector<CellFailure> failures;

    // Mean of `metric` for `strategy` at `round`; throws ContractViolation if absent.
    double mean(const std::string& strategy, const std::string& metric, std::size_t round) const;
    // Per-round means, rounds 1..R.
    std::vector<double> curve(const std::string& strategy, const std::string& metric) const;
};

inline constexpr const char* kMetrics[] = {"human_error", "regret", "info_gain", "convergence", "difficulty"};

std::vector<AggregateRow> aggregate(const std::vector<RoundRecord>& records,
                                    const std::vector<std::string>& strategy_order);

ExperimentResult run_experiment(const ExperimentConfig& config);

enum class SweepParameter { Lambda, Memory };

SweepParameter parse_sweep_parameter(const std::string& name);
std::string to_string(SweepParameter p);

// Config with `value` applied: lambda of every Combined strategy, or the
// simulated observer's memory.
ExperimentConfig apply_sweep_value(const ExperimentConfig& base, SweepParameter parameter, double value);

struct SweepPoint {
    double value = 0.0;
    ExperimentResult result;
};

std::vector<SweepPoint> run_sweep(const ExperimentConfig& base, SweepParameter parameter,
                                  const std::vector<double>& values);

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace revealq
