#include "revealq/core.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "revealq/errors.hpp"

namespace revealq {

Trajectory::Trajectory(TrajectoryId id, FeatureVector features, std::vector<Point> waypoints)
    : id_(id), features_(std::move(features)), waypoints_(std::move(waypoints)) {
    if (features_.empty()) {
        throw ContractViolation("trajectory " + std::to_string(id_) + " has no features");
    }
    for (const Point& p : waypoints_) {
        if (p.size() != 2 && p.size() != 3) {
            throw ContractViolation("waypoints must be 2-D or 3-D points");
        }
    }
}

Preferences::Preferences(std::vector<double> theta) : theta_(std::move(theta)) {
    if (theta_.empty()) {
        throw ContractViolation("preference vector is empty");
    }
    const double norm = std::sqrt(dot(theta_, theta_));
    if (!(std::fabs(norm - 1.0) <= kNormTolerance)) {
        throw ContractViolation("preference vector must have unit norm, got " + std::to_string(norm));
    }
}

Preferences Preferences::from_unnormalized(std::vector<double> raw) {
    const double norm = std::sqrt(dot(raw, raw));
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw ContractViolation("cannot normalize a zero or non-finite preference vector");
    }
    for (double& v : raw) {
        v /= norm;
    }
    return Preferences(std::move(raw));
}

Question::Question(std::vector<Trajectory> trajectories, std::size_t index)
    : trajectories_(std::move(trajectories)), index_(index) {
    if (trajectories_.size() < 2) {
        throw ContractViolation("a question needs at least two trajectories");
    }
    const std::size_t d = trajectories_.front().dim();
    for (const Trajectory& t : trajectories_) {
        if (t.dim() != d) {
            throw ContractViolation("question trajectories disagree on feature dimension");
        }
    }
}

Question Question::with_index(std::size_t index) const {
    Question q = *this;
    q.index_ = index;
    return q;
}

void Answer::validate_for(const Question& question) const {
    if (kind_ == AnswerKind::Choice && slot_ >= question.size()) {
        throw ContractViolation("answer slot " + std::to_string(slot_) + " out of range for a " +
                                std::to_string(question.size()) + "-way question");
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ContractViolation("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
    }
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double reward(const Trajectory& trajectory, const Preferences& prefs) {
    return dot(prefs.theta(), trajectory.features());
}

AnswerDistribution answer_likelihood_from_rewards(double reward_first, double reward_second) {
    static const double kIdkScale = std::exp(2.0) - 1.0;
    const double gap = reward_first - reward_second;
    AnswerDistribution out;
    out.p[AnswerDistribution::kFirst] = 1.0 / (1.0 + std::exp(1.0 - gap));
    out.p[AnswerDistribution::kSecond] = 1.0 / (1.0 + std::exp(1.0 + gap));
    out.p[AnswerDistribution::kIdk] =
        out.p[AnswerDistribution::kFirst] * out.p[AnswerDistribution::kSecond] * kIdkScale;
    return out;
}

AnswerDistribution answer_likelihood(const Question& question, const Preferences& prefs) {
    if (question.size() != 2) {
        throw UnsupportedQuestion("answer likelihood is defined for pairwise questions only, got " +
                                  std::to_string(question.size()) + " trajectories");
    }
    return answer_likelihood_from_rewards(reward(question.at(0), prefs), reward(question.at(1), prefs));
}

Answer sample_answer(const Question& question, const Preferences& true_prefs, Rng& rng) {
    const AnswerDistribution dist = answer_likelihood(question, true_prefs);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    if (u < dist.p[AnswerDistribution::kFirst]) {
        return Answer::choice(0);
    }
    if (u < dist.p[AnswerDistribution::kFirst] + dist.p[AnswerDistribution::kSecond]) {
        return Answer::choice(1);
    }
    return Answer::idk();
}

}  // namespace revealq
