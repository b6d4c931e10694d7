#include <cmath>
#include <set>

#include "doctest.h"
#include "revealq/errors.hpp"
#include "revealq/question_select.hpp"

using namespace revealq;

namespace {

std::vector<Trajectory> random_pool(std::size_t n, std::size_t d, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Trajectory> pool;
    for (std::size_t i = 0; i < n; ++i) {
        FeatureVector f(d);
        for (double& x : f) x = u(rng);
        pool.emplace_back(static_cast<TrajectoryId>(i), f);
    }
    return pool;
}

// Direct double sum over particles and the three outcomes.
double brute_force_info_gain(const Question& q, const RobotBelief& b) {
    double marginal[3] = {0, 0, 0};
    std::vector<std::array<double, 3>> lik;
    for (std::size_t j = 0; j < b.size(); ++j) {
        const auto& t = b.particles[j].theta();
        double r[2];
        for (int s = 0; s < 2; ++s) {
            r[s] = 0.0;
            for (std::size_t c = 0; c < t.size(); ++c) r[s] += t[c] * q.at(s).features()[c];
        }
        const double p0 = std::exp(r[0]) / (std::exp(r[0]) + std::exp(1 + r[1]));
        const double p1 = std::exp(r[1]) / (std::exp(r[1]) + std::exp(1 + r[0]));
        lik.push_back({p0, p1, 1.0 - p0 - p1});
        for (int k = 0; k < 3; ++k) marginal[k] += b.weights[j] * lik.back()[k];
    }
    double mi = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j)
        for (int k = 0; k < 3; ++k) mi += b.weights[j] * lik[j][k] * std::log2(lik[j][k] / marginal[k]);
    return mi;
}

struct Fixture {
    std::vector<Trajectory> pool;
    RobotBelief belief;
    HumanBelief human;
    LearningSummary z_star;
};

Fixture make_fixture(std::uint64_t seed) {
    Rng rng(seed);
    Fixture f;
    f.pool = random_pool(60, 3, rng);
    f.belief = init_belief(3, 100, rng);
    f.human = init_human_belief(3, 100, 3, rng);
    const Preferences truth = Preferences::from_unnormalized({0.4, -0.7, 0.2});
    for (int i = 0; i < 3; ++i) {
        const Question q({f.pool[i], f.pool[i + 10]});
        f.belief = update_belief(f.belief, q, sample_answer(q, truth, rng));
        f.human = observe_question(f.human, q);
    }
    f.z_star = learning_summary(f.belief, f.pool);
    return f;
}

}  // namespace

TEST_CASE("small pools yield every unordered pair") {
    Rng rng(1);
    const std::vector<Trajectory> pool = random_pool(3, 2, rng);
    const std::vector<Question> qs = candidate_questions(pool, 10, rng);
    REQUIRE(qs.size() == 3);
    std::set<std::pair<TrajectoryId, TrajectoryId>> seen;
    for (const Question& q : qs) seen.insert({q.at(0).id(), q.at(1).id()});
    CHECK(seen == std::set<std::pair<TrajectoryId, TrajectoryId>>{{0, 1}, {0, 2}, {1, 2}});
}

TEST_CASE("sampled pairs are distinct and never repeat a trajectory") {
    Rng rng(2);
    const std::vector<Trajectory> pool = random_pool(100, 3, rng);
    const std::vector<Question> qs = candidate_questions(pool, 100, rng);
    CHECK(qs.size() == 100);
    std::set<std::pair<TrajectoryId, TrajectoryId>> seen;
    for (const Question& q : qs) {
        CHECK(q.at(0).id() != q.at(1).id());
        seen.insert({std::min(q.at(0).id(), q.at(1).id()), std::max(q.at(0).id(), q.at(1).id())});
    }
    CHECK(seen.size() == 100);
}

TEST_CASE("candidate sampling is deterministic") {
    Rng rng(3);
    const std::vector<Trajectory> pool = random_pool(50, 3, rng);
    Rng a(77);
    Rng b(77);
    const auto x = candidate_questions(pool, 40, a);
    const auto y = candidate_questions(pool, 40, b);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(x[i].at(0).id() == y[i].at(0).id());
        CHECK(x[i].at(1).id() == y[i].at(1).id());
    }
}

TEST_CASE("a pool of one cannot form questions") {
    Rng rng(1);
    const std::vector<Trajectory> pool{Trajectory(0, {0.5})};
    CHECK_THROWS_AS(candidate_questions(pool, 5, rng), ConfigError);
}

TEST_CASE("identical trajectories carry no information") {
    Rng rng(4);
    const RobotBelief b = init_belief(3, 200, rng);
    const Trajectory t(0, {0.3, 0.9, 0.1});
    CHECK(std::fabs(info_gain(Question({t, Trajectory(1, t.features())}), b)) < 1e-9);
}

TEST_CASE("a delta belief has nothing left to learn") {
    const RobotBelief b = RobotBelief::from_particles({Preferences::from_unnormalized({1, 2, 3})});
    const Question q({Trajectory(0, {0.0, 0.9, 0.1}), Trajectory(1, {0.8, 0.2, 0.4})});
    CHECK(std::fabs(info_gain(q, b)) < 1e-9);
}

TEST_CASE("info gain matches a brute-force double sum") {
    const RobotBelief b = RobotBelief::from_particles(
        {Preferences::from_unnormalized({1, 0}), Preferences::from_unnormalized({0, 1}),
         Preferences::from_unnormalized({-1, 1}), Preferences::from_unnormalized({1, -2})},
        {0.1, 0.2, 0.3, 0.4});
    const Question q({Trajectory(0, {0.9, 0.2}), Trajectory(1, {0.1, 0.8})});
    CHECK(std::fabs(info_gain(q, b) - brute_force_info_gain(q, b)) < 1e-9);
}

TEST_CASE("info gain is bounded and symmetric") {
    Rng rng(5);
    const std::vector<Trajectory> pool = random_pool(40, 3, rng);
    const RobotBelief b = init_belief(3, 200, rng);
    for (const Question& q : candidate_questions(pool, 200, rng)) {
        const double ig = info_gain(q, b);
        CHECK(ig >= 0.0);
        CHECK(ig <= std::log2(3.0));
        CHECK(ig == doctest::Approx(info_gain(Question({q.at(1), q.at(0)}), b)).epsilon(1e-12));
        CHECK(std::fabs(ig - brute_force_info_gain(q, b)) < 1e-9);
    }
}

TEST_CASE("combined with zero lambda selects like informative") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Fixture f = make_fixture(seed);
        Rng rng(seed + 1000);
        const std::vector<Question> cands = candidate_questions(f.pool, 50, rng);
        SelectionConfig informative{Strategy::Informative};
        SelectionConfig combined{Strategy::Combined, 0.0};
        Rng r1(seed);
        Rng r2(seed);
        REQUIRE(select_question(cands, f.belief, f.human, f.z_star, informative, r1).index ==
                select_question(cands, f.belief, f.human, f.z_star, combined, r2).index);
    }
}

TEST_CASE("combined with a huge lambda selects like revealing") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Fixture f = make_fixture(seed);
        Rng rng(seed + 500);
        const std::vector<Question> cands = candidate_questions(f.pool, 50, rng);
        Rng r1(seed);
        Rng r2(seed);
        const Selection rev = select_question(cands, f.belief, f.human, f.z_star, {Strategy::Revealing}, r1);
        const Selection comb = select_question(cands, f.belief, f.human, f.z_star, {Strategy::Combined, 1e6}, r2);
        // Agreement is argmax-level: the revealing winner must not lose by more than the info-gain spread.
        if (rev.index != comb.index) {
            const double gap = rev.chosen().reveal_score - comb.chosen().reveal_score;
            CHECK(gap * 1e6 <= std::log2(3.0));
        } else {
            CHECK(rev.index == comb.index);
        }
    }
}

TEST_CASE("selection is the argmax of the strategy's score") {
    Fixture f = make_fixture(42);
    std::vector<Question> cands;
    for (int i = 0; i < 5; ++i) cands.emplace_back(std::vector<Trajectory>{f.pool[2 * i], f.pool[2 * i + 21]});
    for (Strategy s : {Strategy::Informative, Strategy::Revealing, Strategy::Combined}) {
        SelectionConfig cfg{s, 3.0};
        Rng rng(1);
        const Selection sel = select_question(cands, f.belief, f.human, f.z_star, cfg, rng);
        std::size_t best = 0;
        double best_value = -1.0;
        const RevealScorer scorer(f.human, f.z_star);
        for (std::size_t i = 0; i < cands.size(); ++i) {
            const double ig = info_gain(cands[i], f.belief);
            const double rv = scorer.score(question_stats(cands[i]));
            const double v = s == Strategy::Informative ? ig : s == Strategy::Revealing ? rv : ig + 3.0 * rv;
            if (v > best_value) {
                best_value = v;
                best = i;
            }
        }
        CHECK(sel.index == best);
        CHECK(sel.scored.size() == cands.size());
    }
}

TEST_CASE("ties resolve to the earliest candidate") {
    const RobotBelief b = RobotBelief::from_particles({Preferences({1.0, 0.0})});
    Rng rng(1);
    const HumanBelief h = init_human_belief(2, 10, 3, rng);
    const Trajectory t(0, {0.5, 0.5});
    const std::vector<Question> cands(4, Question({t, Trajectory(1, t.features())}));
    const LearningSummary z = learning_summary(b, std::vector<Trajectory>{t});
    CHECK(select_question(cands, b, h, z, {Strategy::Informative}, rng).index == 0);
}

TEST_CASE("random selection draws from its stream") {
    Fixture f = make_fixture(3);
    Rng rng(9);
    const std::vector<Question> cands = candidate_questions(f.pool, 50, rng);
    std::set<std::size_t> picks;
    for (std::uint64_t s = 0; s < 30; ++s) {
        Rng r(s);
        picks.insert(select_question(cands, f.belief, f.human, f.z_star, {Strategy::Random}, r).index);
    }
    CHECK(picks.size() > 10);
}

TEST_CASE("strategy names round-trip") {
    for (Strategy s : {Strategy::Random, Strategy::Informative, Strategy::Revealing, Strategy::Combined}) {
        CHECK(parse_strategy(to_string(s)) == s);
    }
    CHECK_THROWS_AS(parse_strategy("greedy"), ValidationError);
    CHECK(SelectionConfig{Strategy::Combined, 10.0}.display_name() == "combined(lambda=10)");
    CHECK(SelectionConfig{Strategy::Random}.display_name() == "random");
    CHECK_THROWS_AS(SelectionConfig({Strategy::Combined, -1.0}).validate(), ConfigError);
}

TEST_CASE("convergence is zero when the question repeats the learned trajectory") {
    const std::vector<Trajectory> pool{Trajectory(0, {0.0, 0.0}), Trajectory(1, {1.0, 0.0})};
    const RobotBelief b = RobotBelief::from_particles({Preferences({-1.0, 0.0})});
    CHECK(convergence_metric(Question({pool[0], pool[0]}), b, pool).value == 0.0);
    CHECK(convergence_metric(Question({pool[0], pool[1]}), b, pool).value == doctest::Approx(1.0));
}

TEST_CASE("convergence matches an independent recomputation") {
    Rng rng(15);
    const std::vector<Trajectory> pool = random_pool(50, 3, rng);
    RobotBelief b = init_belief(3, 100, rng);
    b = update_belief(b, Question({pool[0], pool[1]}), Answer::choice(1));
    std::vector<double> mean = posterior_mean(b);
    const Trajectory& learned = optimal_trajectory(Preferences::from_unnormalized(mean), pool);
    for (const Question& q : candidate_questions(pool, 20, rng)) {
        double expected = 0.0;
        for (const Trajectory& t : q.trajectories()) {
            double sq = 0.0;
            for (std::size_t c = 0; c < 3; ++c) sq += std::pow(t.features()[c] - learned.features()[c], 2);
            expected += std::sqrt(sq);
        }
        const ConvergenceResult r = convergence_metric(q, b, pool);
        CHECK(std::fabs(r.value - expected) < 1e-12);
        CHECK_FALSE(r.used_fallback);
    }
}

TEST_CASE("convergence falls back to the heaviest particle when the mean vanishes") {
    const std::vector<Trajectory> pool{Trajectory(0, {0.0}), Trajectory(1, {1.0})};
    const RobotBelief b = RobotBelief::from_particles({Preferences({1.0}), Preferences({-1.0})}, {0.5, 0.5});
    const ConvergenceResult r = convergence_metric(Question({pool[0], pool[1]}), b, pool);
    CHECK(r.used_fallback);
    CHECK(r.value == doctest::Approx(1.0));
}
