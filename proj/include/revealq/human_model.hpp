#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "revealq/core.hpp"
#include "revealq/random.hpp"
#include "revealq/robot_belief.hpp"

namespace revealq {

// Mean and population standard deviation of the features shown in a question.
struct QuestionStats {
    std::vector<double> mu_q;
    std::vector<double> sigma_q;

    std::size_t dim() const { return mu_q.size(); }
    std::vector<double> as_vector() const;
};

// An observer's belief over what the robot has learned, represented by a
// fixed set of candidate summaries and driven by the last `memory` questions.
// The prior over candidates is uniform, so the weights depend only on the
// window contents.
struct HumanBelief {
    std::vector<LearningSummary> candidates;
    std::vector<double> log_weights;  // normalized: logsumexp == 0
    std::deque<QuestionStats> window;
    std::size_t memory = 1;

    std::size_t size() const { return candidates.size(); }
    std::vector<double> weights() const;
};

QuestionStats question_stats(const Question& question);

// Unnormalized log P(Q | z) = -|(mu_Q, sigma_Q) - z|^2.
double question_log_likelihood(const QuestionStats& stats, const LearningSummary& z);
double question_log_likelihood(std::span<const double> stats, std::span<const double> z);

// Candidates: mu uniform in [0,1]^d, sigma uniform in [0,0.5]^d.
HumanBelief init_human_belief(std::size_t d, std::size_t candidates, std::size_t memory, Rng& rng);

// Same candidate set, fresh window, different memory length.
HumanBelief with_memory(const HumanBelief& belief, std::size_t memory);

HumanBelief observe_question(const HumanBelief& belief, const Question& question);

// Posterior mass at `z_star` if `candidate` were shown next, with z_star
// treated as one extra evaluation point beside the candidate set:
//   u(z*) / (u(z*) + sum_l u(z_l)),  u(z) = prod_window P(Q|z).
double revealing_score(const HumanBelief& belief, const Question& candidate, const LearningSummary& z_star);

// Batched form of revealing_score over many candidate questions that shares
// the kept-window sums across candidates.
class RevealScorer {
public:
    RevealScorer(const HumanBelief& belief, const LearningSummary& z_star);

    double score(const QuestionStats& candidate) const;

private:
    std::vector<std::vector<double>> points_;  // L candidates then z_star
    std::vector<double> base_;                 // kept-window log-likelihood per point
};

// Distance between the posterior-mean summary and z_star, divided by sqrt(2d).
double human_error(const HumanBelief& belief, const LearningSummary& z_star);

std::vector<double> posterior_mean_summary(const HumanBelief& belief);
// Shannon entropy of the candidate weights, in nats.
double weight_entropy(const HumanBelief& belief);

}  // namespace revealq
