#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "revealq/core.hpp"
#include "revealq/human_model.hpp"
#include "revealq/random.hpp"
#include "revealq/robot_belief.hpp"

namespace revealq {

enum class Strategy { Random, Informative, Revealing, Combined };

std::string to_string(Strategy s);
// Throws ValidationError on an unknown name.
Strategy parse_strategy(const std::string& name);

struct SelectionConfig {
    Strategy strategy = Strategy::Combined;
    double lambda = 1.0;              // weight on the revealing term, Combined only
    std::size_t candidate_count = 100;
    std::size_t model_memory = 3;     // memory of the observer model the robot plans against
    std::string label;                // display name; empty means derived

    std::string display_name() const;
    void validate() const;
};

struct ScoredQuestion {
    Question question;
    double info_gain = 0.0;     // bits
    double reveal_score = 0.0;  // in (0,1); 0 when not computed
    double combined = 0.0;
};

struct Selection {
    std::size_t index = 0;                // position in the candidate list
    std::vector<ScoredQuestion> scored;   // one per candidate, in candidate order

    const ScoredQuestion& chosen() const { return scored[index]; }
};

// Distinct unordered pairs drawn uniformly without replacement; every pair
// (in canonical order) when `count` covers them all.
std::vector<Question> candidate_questions(std::span<const Trajectory> pool, std::size_t count, Rng& rng);

// Mutual information between the answer and the preferences under the
// particle belief, in bits. Clamped at zero.
double info_gain(const Question& question, const RobotBelief& belief);

// Scores every candidate and returns the argmax under `config.strategy`.
// Ties resolve to the earliest candidate. `rng` is consumed only by Random.
Selection select_question(std::span<const Question> candidates, const RobotBelief& belief,
                          const HumanBelief& human_model, const LearningSummary& z_star,
                          const SelectionConfig& config, Rng& rng);

struct ConvergenceResult {
    double value = 0.0;
    bool used_fallback = false;  // posterior mean had zero norm; heaviest particle used
};

// Summed feature distance between the question's trajectories and the
// trajectory optimal for the normalized posterior-mean preferences.
ConvergenceResult convergence_metric(const Question& question, const RobotBelief& belief,
                                     std::span<const Trajectory> pool);

}  // namespace revealq
