#include "revealq/human_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "revealq/errors.hpp"

namespace revealq {
namespace {

double log_sum_exp(std::span<const double> v) {
    const double peak = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(peak)) {
        return peak;
    }
    double acc = 0.0;
    for (double x : v) {
        acc += std::exp(x - peak);
    }
    return peak + std::log(acc);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ContractViolation("question stats and summary differ in dimension: " +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

}  // namespace

std::vector<double> QuestionStats::as_vector() const {
    std::vector<double> v;
    v.reserve(mu_q.size() * 2);
    v.insert(v.end(), mu_q.begin(), mu_q.end());
    v.insert(v.end(), sigma_q.begin(), sigma_q.end());
    return v;
}

std::vector<double> HumanBelief::weights() const {
    std::vector<double> w(log_weights.size());
    std::transform(log_weights.begin(), log_weights.end(), w.begin(), [](double lw) { return std::exp(lw); });
    return w;
}

QuestionStats question_stats(const Question& question) {
    const std::size_t d = question.dim();
    const double n = static_cast<double>(question.size());
    QuestionStats s;
    s.mu_q.assign(d, 0.0);
    s.sigma_q.assign(d, 0.0);
    for (const Trajectory& t : question.trajectories()) {
        for (std::size_t c = 0; c < d; ++c) {
            s.mu_q[c] += t.features()[c];
        }
    }
    for (double& m : s.mu_q) {
        m /= n;
    }
    for (const Trajectory& t : question.trajectories()) {
        for (std::size_t c = 0; c < d; ++c) {
            const double dev = t.features()[c] - s.mu_q[c];
            s.sigma_q[c] += dev * dev;
        }
    }
    for (double& v : s.sigma_q) {
        v = std::sqrt(v / n);
    }
    return s;
}

double question_log_likelihood(std::span<const double> stats, std::span<const double> z) {
    return -squared_distance(stats, z);
}

double question_log_likelihood(const QuestionStats& stats, const LearningSummary& z) {
    return question_log_likelihood(stats.as_vector(), z.as_vector());
}

HumanBelief init_human_belief(std::size_t d, std::size_t candidates, std::size_t memory, Rng& rng) {
    if (d < 1) {
        throw ConfigError("feature dimension must be at least 1");
    }
    if (candidates < 2) {
        throw ConfigError("human model needs at least 2 candidates, got " + std::to_string(candidates));
    }
    if (memory < 1) {
        throw ConfigError("human memory must be at least 1 question");
    }
    std::uniform_real_distribution<double> mu_dist(0.0, 1.0);
    std::uniform_real_distribution<double> sigma_dist(0.0, 0.5);
    HumanBelief b;
    b.memory = memory;
    b.candidates.reserve(candidates);
    for (std::size_t l = 0; l < candidates; ++l) {
        LearningSummary z;
        z.mu.resize(d);
        z.sigma.resize(d);
        for (double& v : z.mu) {
            v = mu_dist(rng);
        }
        for (double& v : z.sigma) {
            v = sigma_dist(rng);
        }
        b.candidates.push_back(std::move(z));
    }
    b.log_weights.assign(candidates, -std::log(static_cast<double>(candidates)));
    return b;
}

HumanBelief with_memory(const HumanBelief& belief, std::size_t memory) {
    if (memory < 1) {
        throw ConfigError("human memory must be at least 1 question");
    }
    HumanBelief b;
    b.candidates = belief.candidates;
    b.memory = memory;
    b.log_weights.assign(b.candidates.size(), -std::log(static_cast<double>(b.candidates.size())));
    return b;
}

HumanBelief observe_question(const HumanBelief& belief, const Question& question) {
    HumanBelief next = belief;
    next.window.push_back(question_stats(question));
    while (next.window.size() > next.memory) {
        next.window.pop_front();
    }
    std::vector<std::vector<double>> window_vectors;
    window_vectors.reserve(next.window.size());
    for (const QuestionStats& s : next.window) {
        window_vectors.push_back(s.as_vector());
    }
    for (std::size_t l = 0; l < next.size(); ++l) {
        const std::vector<double> z = next.candidates[l].as_vector();
        double lw = 0.0;
        for (const auto& s : window_vectors) {
            lw += question_log_likelihood(s, z);
        }
        next.log_weights[l] = lw;
    }
    const double norm = log_sum_exp(next.log_weights);
    for (double& lw : next.log_weights) {
        lw -= norm;
    }
    return next;
}

RevealScorer::RevealScorer(const HumanBelief& belief, const LearningSummary& z_star) {
    points_.reserve(belief.size() + 1);
    for (const LearningSummary& z : belief.candidates) {
        points_.push_back(z.as_vector());
    }
    points_.push_back(z_star.as_vector());

    // Appending one question to a full window evicts the oldest entry.
    const std::size_t kept = std::min(belief.window.size(), belief.memory - 1);
    const std::size_t skip = belief.window.size() - kept;
    base_.assign(points_.size(), 0.0);
    for (std::size_t p = 0; p < points_.size(); ++p) {
        for (std::size_t w = skip; w < belief.window.size(); ++w) {
            base_[p] += question_log_likelihood(belief.window[w].as_vector(), points_[p]);
        }
    }
}

double RevealScorer::score(const QuestionStats& candidate) const {
    const std::vector<double> s = candidate.as_vector();
    std::vector<double> log_u(points_.size());
    for (std::size_t p = 0; p < points_.size(); ++p) {
        log_u[p] = base_[p] + question_log_likelihood(s, points_[p]);
    }
    return std::exp(log_u.back() - log_sum_exp(log_u));
}

double revealing_score(const HumanBelief& belief, const Question& candidate, const LearningSummary& z_star) {
    return RevealScorer(belief, z_star).score(question_stats(candidate));
}

std::vector<double> posterior_mean_summary(const HumanBelief& belief) {
    const std::vector<double> w = belief.weights();
    std::vector<double> mean(belief.candidates.front().dim() * 2, 0.0);
    for (std::size_t l = 0; l < belief.size(); ++l) {
        const std::vector<double> z = belief.candidates[l].as_vector();
        for (std::size_t c = 0; c < mean.size(); ++c) {
            mean[c] += w[l] * z[c];
        }
    }
    return mean;
}

double human_error(const HumanBelief& belief, const LearningSummary& z_star) {
    const std::vector<double> estimate = posterior_mean_summary(belief);
    const std::vector<double> truth = z_star.as_vector();
    return std::sqrt(squared_distance(estimate, truth) / static_cast<double>(truth.size()));
}

double weight_entropy(const HumanBelief& belief) {
    double h = 0.0;
    for (double lw : belief.log_weights) {
        if (std::isfinite(lw)) {
            h -= std::exp(lw) * lw;
        }
    }
    return h;
}

}  // namespace revealq
