#include "revealq/question_select.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "revealq/errors.hpp"

namespace revealq {

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::Random:
            return "random";
        case Strategy::Informative:
            return "informative";
        case Strategy::Revealing:
            return "revealing";
        case Strategy::Combined:
            return "combined";
    }
    return "unknown";
}

Strategy parse_strategy(const std::string& name) {
    if (name == "random") return Strategy::Random;
    if (name == "informative") return Strategy::Informative;
    if (name == "revealing") return Strategy::Revealing;
    if (name == "combined") return Strategy::Combined;
    throw ValidationError("unknown strategy '" + name +
                          "' (expected random, informative, revealing or combined)");
}

std::string SelectionConfig::display_name() const {
    if (!label.empty()) {
        return label;
    }
    if (strategy == Strategy::Combined) {
        std::ostringstream out;
        out << "combined(lambda=" << lambda << ")";
        return out.str();
    }
    return to_string(strategy);
}

void SelectionConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("lambda must be a finite non-negative number");
    }
    if (candidate_count < 1) {
        throw ConfigError("candidate_count must be at least 1");
    }
    if (model_memory < 1) {
        throw ConfigError("model_memory must be at least 1");
    }
}

std::vector<Question> candidate_questions(std::span<const Trajectory> pool, std::size_t count, Rng& rng) {
    const std::size_t n = pool.size();
    if (n < 2) {
        throw ConfigError("need at least 2 trajectories to form a question, pool has " + std::to_string(n));
    }
    const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    std::vector<Question> out;

    if (count >= total) {
        out.reserve(total);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                out.emplace_back(std::vector<Trajectory>{pool[i], pool[j]});
            }
        }
        return out;
    }

    out.reserve(count);
    std::unordered_set<std::uint64_t> seen;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    while (out.size() < count) {
        std::size_t a = pick(rng);
        std::size_t b = pick(rng);
        if (a == b) {
            continue;
        }
        if (a > b) {
            std::swap(a, b);
        }
        if (!seen.insert(static_cast<std::uint64_t>(a) * n + b).second) {
            continue;
        }
        out.emplace_back(std::vector<Trajectory>{pool[a], pool[b]});
    }
    return out;
}

double info_gain(const Question& question, const RobotBelief& belief) {
    if (question.size() != 2) {
        throw UnsupportedQuestion("information gain is defined for pairwise questions only");
    }
    double total_weight = 0.0;
    for (double w : belief.weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw DegenerateEvidence("belief weights are not a valid distribution");
        }
        total_weight += w;
    }
    if (!(std::fabs(total_weight - 1.0) < 1e-6)) {
        throw DegenerateEvidence("belief weights are not normalized");
    }

    const std::size_t m = belief.size();
    std::vector<AnswerDistribution> lik(m);
    std::array<double, 3> marginal{};
    for (std::size_t j = 0; j < m; ++j) {
        lik[j] = answer_likelihood(question, belief.particles[j]);
        for (std::size_t q = 0; q < 3; ++q) {
            marginal[q] += belief.weights[j] * lik[j].p[q];
        }
    }
    double mi = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        if (belief.weights[j] == 0.0) {
            continue;
        }
        double inner = 0.0;
        for (std::size_t q = 0; q < 3; ++q) {
            const double p = lik[j].p[q];
            if (p > 0.0) {
                inner += p * std::log2(p / marginal[q]);
            }
        }
        mi += belief.weights[j] * inner;
    }
    return std::max(0.0, mi);
}

Selection select_question(std::span<const Question> candidates, const RobotBelief& belief,
                          const HumanBelief& human_model, const LearningSummary& z_star,
                          const SelectionConfig& config, Rng& rng) {
    if (candidates.empty()) {
        throw ConfigError("no candidate questions to select from");
    }
    config.validate();

    const bool needs_reveal =
        config.strategy == Strategy::Revealing || config.strategy == Strategy::Combined;
    std::optional<RevealScorer> scorer;
    if (needs_reveal) {
        scorer.emplace(human_model, z_star);
    }

    Selection sel;
    sel.scored.reserve(candidates.size());
    for (const Question& q : candidates) {
        ScoredQuestion s{q};
        s.info_gain = info_gain(q, belief);
        if (scorer) {
            s.reveal_score = scorer->score(question_stats(q));
        }
        switch (config.strategy) {
            case Strategy::Random:
            case Strategy::Informative:
                s.combined = s.info_gain;
                break;
            case Strategy::Revealing:
                s.combined = s.reveal_score;
                break;
            case Strategy::Combined:
                s.combined = s.info_gain + config.lambda * s.reveal_score;
                break;
        }
        sel.scored.push_back(std::move(s));
    }

    if (config.strategy == Strategy::Random) {
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        sel.index = pick(rng);
        return sel;
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < sel.scored.size(); ++i) {
        if (sel.scored[i].combined > sel.scored[best].combined) {
            best = i;
        }
    }
    sel.index = best;
    return sel;
}

ConvergenceResult convergence_metric(const Question& question, const RobotBelief& belief,
                                     std::span<const Trajectory> pool) {
    if (question.size() != 2) {
        throw UnsupportedQuestion("convergence is defined for pairwise questions only");
    }
    ConvergenceResult result;
    const LearnedTrajectory learned_index = learned_trajectory(belief, pool);
    result.used_fallback = learned_index.used_fallback;
    const Trajectory* learned = &pool[learned_index.index];
    for (const Trajectory& t : question.trajectories()) {
        double sq = 0.0;
        for (std::size_t c = 0; c < t.dim(); ++c) {
            const double diff = learned->features()[c] - t.features()[c];
            sq += diff * diff;
        }
        result.value += std::sqrt(sq);
    }
    return result;
}

}  // namespace revealq
