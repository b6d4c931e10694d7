#include <cmath>
#include <set>

#include "doctest.h"
#include "revealq/errors.hpp"
#include "revealq/sim_harness.hpp"

using namespace revealq;

namespace {

ExperimentConfig small_config(std::size_t users = 3, std::size_t rounds = 5) {
    ExperimentConfig cfg;
    cfg.environment = {"tabletop", 40, 3};
    cfg.users = users;
    cfg.rounds = rounds;
    cfg.candidates = 20;
    cfg.particles = 60;
    cfg.human_candidates = 50;
    cfg.parallelism = 1;
    cfg.strategies = {{Strategy::Random}, {Strategy::Informative}, {Strategy::Revealing}, {Strategy::Combined, 1.0}};
    return cfg;
}

std::vector<RoundRecord> run_one(const Environment& env, const SelectionConfig& strategy, const ExperimentConfig& cfg,
                                 std::size_t user, Teacher teacher = Teacher::Noisy) {
    const UserSeeds seeds = UserSeeds::derive(cfg.seed, user);
    UserRunOptions options;
    options.rounds = cfg.rounds;
    options.candidates = cfg.candidates;
    options.teacher = teacher;
    options.user = user;
    return run_user(env, strategy, make_user_start(env, strategy, cfg, seeds), seeds, options);
}

}  // namespace

TEST_CASE("a zero-round user produces no records") {
    ExperimentConfig cfg = small_config();
    Rng rng(environment_seed(cfg.seed));
    const Environment env = build_tabletop(40, rng);
    cfg.rounds = 0;
    CHECK(run_one(env, {Strategy::Informative}, cfg, 0).empty());
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("regret falls over twenty rounds for almost every seed") {
    ExperimentConfig cfg = small_config(1, 20);
    cfg.candidates = 40;
    cfg.particles = 100;
    std::size_t improved = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        cfg.seed = seed;
        Rng rng(environment_seed(seed));
        const Environment env = build_tabletop(40, rng);
        const std::vector<RoundRecord> recs = run_one(env, {Strategy::Informative}, cfg, 0, Teacher::Rational);
        if (recs.back().regret < recs.front().regret || recs.back().regret == 0.0) ++improved;
    }
    CHECK(improved >= 45);
}

TEST_CASE("experiments are bitwise reproducible regardless of parallelism") {
    ExperimentConfig cfg = small_config();
    const ExperimentResult a = run_experiment(cfg);
    cfg.parallelism = 4;
    const ExperimentResult b = run_experiment(cfg);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].strategy == b.records[i].strategy);
        CHECK(a.records[i].first == b.records[i].first);
        CHECK(a.records[i].second == b.records[i].second);
        CHECK(a.records[i].regret == b.records[i].regret);
        CHECK(a.records[i].human_error == b.records[i].human_error);
    }
}

TEST_CASE("records are ordered by strategy, user and round") {
    const ExperimentConfig cfg = small_config(2, 3);
    const ExperimentResult r = run_experiment(cfg);
    REQUIRE(r.records.size() == 4 * 2 * 3);
    CHECK(r.failures.empty());
    std::size_t i = 0;
    for (const SelectionConfig& s : cfg.strategies) {
        for (std::size_t u = 0; u < 2; ++u) {
            for (std::size_t round = 1; round <= 3; ++round, ++i) {
                CHECK(r.records[i].strategy == s.display_name());
                CHECK(r.records[i].user == u);
                CHECK(r.records[i].round == round);
            }
        }
    }
}

TEST_CASE("a single user aggregates with zero spread") {
    const ExperimentResult r = run_experiment(small_config(1, 4));
    for (const AggregateRow& row : r.aggregate) {
        CHECK(row.stddev == 0.0);
        CHECK(row.n == 1);
    }
    CHECK(r.curve("random", "regret").size() == 4);
}

TEST_CASE("aggregate rows hold the population mean and deviation") {
    std::vector<RoundRecord> recs(3);
    const double regrets[] = {1.0, 2.0, 6.0};
    for (std::size_t i = 0; i < 3; ++i) {
        recs[i].strategy = "s";
        recs[i].round = 1;
        recs[i].user = i;
        recs[i].regret = regrets[i];
        recs[i].answered_idk = i == 0;
    }
    for (const AggregateRow& row : aggregate(recs, {"s"})) {
        if (row.metric == "regret") {
            CHECK(row.mean == doctest::Approx(3.0));
            CHECK(row.stddev == doctest::Approx(std::sqrt(14.0 / 3.0)));
        }
        if (row.metric == "difficulty") CHECK(row.mean == doctest::Approx(1.0 / 3.0));
    }
}

TEST_CASE("identical trajectories draw I don't know at the model rate") {
    Environment env;
    env.name = "synthetic";
    env.feature_names = {"f0", "f1"};
    for (TrajectoryId i = 0; i < 10; ++i) env.pool.emplace_back(i, FeatureVector{0.4, 0.6});
    ExperimentConfig cfg = small_config(1, 20);
    cfg.environment = {"synthetic", 10, 2};
    std::size_t idk = 0;
    std::size_t total = 0;
    for (std::size_t u = 0; u < 100; ++u) {
        for (const RoundRecord& r : run_one(env, {Strategy::Random}, cfg, u)) {
            idk += r.answered_idk ? 1 : 0;
            ++total;
        }
    }
    CHECK(static_cast<double>(idk) / static_cast<double>(total) == doctest::Approx(0.46212).epsilon(0.05));
}

TEST_CASE("every strategy sees the same first-round candidates and teacher") {
    ExperimentConfig cfg = small_config(1, 1);
    cfg.dump_scores = true;
    const ExperimentResult r = run_experiment(cfg);
    REQUIRE(r.records.size() == 4);
    for (const RoundRecord& rec : r.records) {
        REQUIRE(rec.scores.size() == r.records[0].scores.size());
        for (std::size_t i = 0; i < rec.scores.size(); ++i) {
            CHECK(rec.scores[i].first == r.records[0].scores[i].first);
            CHECK(rec.scores[i].second == r.records[0].scores[i].second);
        }
    }
    Rng env_rng(1);
    const Environment env = build_tabletop(10, env_rng);
    const UserStart a = make_user_start(env, {Strategy::Random}, cfg, UserSeeds::derive(cfg.seed, 0));
    const UserStart b = make_user_start(env, {Strategy::Informative}, cfg, UserSeeds::derive(cfg.seed, 0));
    CHECK(a.true_prefs.theta() == b.true_prefs.theta());
}

TEST_CASE("per-user seeds are distinct streams") {
    const UserSeeds a = UserSeeds::derive(1, 0);
    const UserSeeds b = UserSeeds::derive(1, 1);
    const std::set<std::uint64_t> all{a.true_prefs, a.robot_belief, a.human_belief, a.candidates, a.answers,
                                      a.selection,  b.true_prefs,   b.robot_belief, b.human_belief, b.candidates,
                                      b.answers,    b.selection};
    CHECK(all.size() == 12);
    CHECK(environment_seed(1) != environment_seed(2));
}

TEST_CASE("a one-value sweep matches the plain experiment") {
    ExperimentConfig cfg = small_config(2, 3);
    cfg.strategies = {{Strategy::Combined, 1.0}};
    const ExperimentResult plain = run_experiment(apply_sweep_value(cfg, SweepParameter::Lambda, 4.0));
    const std::vector<SweepPoint> sweep = run_sweep(cfg, SweepParameter::Lambda, {4.0});
    REQUIRE(sweep.size() == 1);
    REQUIRE(sweep[0].result.records.size() == plain.records.size());
    for (std::size_t i = 0; i < plain.records.size(); ++i) {
        CHECK(sweep[0].result.records[i].regret == plain.records[i].regret);
        CHECK(sweep[0].result.records[i].human_error == plain.records[i].human_error);
    }
}

TEST_CASE("the observer's memory never changes what the robot learns") {
    ExperimentConfig cfg = small_config(3, 6);
    const std::vector<SweepPoint> sweep = run_sweep(cfg, SweepParameter::Memory, {1, 3, 10});
    for (const SweepPoint& p : sweep) {
        REQUIRE(p.result.records.size() == sweep[0].result.records.size());
        for (std::size_t i = 0; i < p.result.records.size(); ++i) {
            CHECK(p.result.records[i].regret == sweep[0].result.records[i].regret);
        }
    }
}

TEST_CASE("round metrics stay in range") {
    const ExperimentResult r = run_experiment(small_config(3, 6));
    for (const RoundRecord& rec : r.records) {
        CHECK(rec.regret >= 0.0);
        CHECK(rec.human_error >= 0.0);
        CHECK(rec.human_error <= 1.0);
        CHECK(rec.info_gain >= 0.0);
        CHECK(rec.info_gain <= std::log2(3.0));
        CHECK(rec.convergence >= 0.0);
        CHECK(rec.first != rec.second);
        CHECK(rec.answered_idk != rec.chosen_slot.has_value());
    }
}

TEST_CASE("sweep values are validated") {
    ExperimentConfig cfg = small_config();
    CHECK_THROWS_AS(apply_sweep_value(cfg, SweepParameter::Memory, 0.0), ConfigError);
    CHECK_THROWS_AS(apply_sweep_value(cfg, SweepParameter::Memory, 2.5), ConfigError);
    CHECK_THROWS_AS(apply_sweep_value(cfg, SweepParameter::Lambda, -1.0), ConfigError);
    cfg.strategies = {{Strategy::Informative}};
    CHECK_THROWS_AS(apply_sweep_value(cfg, SweepParameter::Lambda, 1.0), ConfigError);
    CHECK_THROWS_AS(parse_sweep_parameter("alpha"), ValidationError);
    CHECK(parse_sweep_parameter("k") == SweepParameter::Memory);
}

TEST_CASE("spearman uses average ranks") {
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(spearman({1, 2, 3}, {5, 5, 6}) == doctest::Approx(std::sqrt(3.0) / 2.0));
    CHECK_THROWS_AS(spearman({1}, {1}), ContractViolation);
}

TEST_CASE("config validation names the offending field") {
    ExperimentConfig cfg = small_config();
    cfg.strategies.push_back({Strategy::Random});
    CHECK_THROWS_WITH_AS(cfg.validate(), "strategy labels must be unique", ConfigError);
    cfg = small_config();
    cfg.environment.name = "";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
