#pragma once

// Trajectories, questions, answers, preference vectors and the pairwise
// answer model used both to simulate teachers and to weight the robot's
// posterior.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "revealq/random.hpp"

namespace revealq {

using FeatureVector = std::vector<double>;
using TrajectoryId = std::uint32_t;

// A 2-D or 3-D display point in workspace-normalized units.
using Point = std::vector<double>;

class Trajectory {
public:
    Trajectory(TrajectoryId id, FeatureVector features, std::vector<Point> waypoints = {});

    TrajectoryId id() const { return id_; }
    const FeatureVector& features() const { return features_; }
    const std::vector<Point>& waypoints() const { return waypoints_; }
    bool has_waypoints() const { return !waypoints_.empty(); }
    std::size_t dim() const { return features_.size(); }

private:
    TrajectoryId id_;
    FeatureVector features_;
    std::vector<Point> waypoints_;
};

// Unit-norm weight vector over features.
class Preferences {
public:
    static constexpr double kNormTolerance = 1e-9;

    // Throws ContractViolation unless |theta| == 1 within kNormTolerance.
    explicit Preferences(std::vector<double> theta);

    // Rescales to unit norm. Throws ContractViolation on a zero vector.
    static Preferences from_unnormalized(std::vector<double> raw);

    const std::vector<double>& theta() const { return theta_; }
    std::size_t dim() const { return theta_.size(); }

private:
    std::vector<double> theta_;
};

class Question {
public:
    // Requires at least two trajectories sharing one feature dimension.
    Question(std::vector<Trajectory> trajectories, std::size_t index = 0);

    const std::vector<Trajectory>& trajectories() const { return trajectories_; }
    const Trajectory& at(std::size_t slot) const { return trajectories_.at(slot); }
    std::size_t size() const { return trajectories_.size(); }
    std::size_t dim() const { return trajectories_.front().dim(); }
    std::size_t index() const { return index_; }

    Question with_index(std::size_t index) const;

private:
    std::vector<Trajectory> trajectories_;
    std::size_t index_;
};

enum class AnswerKind { Choice, IDontKnow };

class Answer {
public:
    static Answer choice(std::size_t slot) { return Answer(AnswerKind::Choice, slot); }
    static Answer idk() { return Answer(AnswerKind::IDontKnow, 0); }

    AnswerKind kind() const { return kind_; }
    bool is_idk() const { return kind_ == AnswerKind::IDontKnow; }
    // Only meaningful for Choice answers.
    std::size_t slot() const { return slot_; }

    // Throws ContractViolation if a Choice slot is out of range for `question`.
    void validate_for(const Question& question) const;

    friend bool operator==(const Answer&, const Answer&) = default;

private:
    Answer(AnswerKind kind, std::size_t slot) : kind_(kind), slot_(slot) {}

    AnswerKind kind_;
    std::size_t slot_;
};

// Outcome probabilities for a pairwise question: first, second, "I don't know".
struct AnswerDistribution {
    static constexpr std::size_t kFirst = 0;
    static constexpr std::size_t kSecond = 1;
    static constexpr std::size_t kIdk = 2;

    std::array<double, 3> p{};

    double of(const Answer& answer) const {
        return answer.is_idk() ? p[kIdk] : p[answer.slot()];
    }
};

// Raw dot-product kernel, no normalization requirement on either side.
double dot(std::span<const double> a, std::span<const double> b);

// theta . f(xi). Throws ContractViolation on dimension mismatch.
double reward(const Trajectory& trajectory, const Preferences& prefs);

// Pairwise answer model with an "I don't know" option:
//   P(xi_i)  = e^{R_i} / (e^{R_i} + e^{1 + R_-i})
//   P(idk)   = P(xi_1) P(xi_2) (e^2 - 1)
// The three terms sum to one exactly. Throws UnsupportedQuestion unless the
// question has two trajectories.
AnswerDistribution answer_likelihood(const Question& question, const Preferences& prefs);

// Same model evaluated from the two rewards directly.
AnswerDistribution answer_likelihood_from_rewards(double reward_first, double reward_second);

Answer sample_answer(const Question& question, const Preferences& true_prefs, Rng& rng);

}  // namespace revealq
