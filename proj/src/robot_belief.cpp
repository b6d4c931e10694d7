#include "revealq/robot_belief.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "revealq/errors.hpp"

namespace revealq {
namespace {

Preferences sample_unit_sphere(std::size_t d, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (;;) {
        std::vector<double> v(d);
        for (double& x : v) {
            x = normal(rng);
        }
        const double norm = std::sqrt(dot(v, v));
        if (norm > 1e-12) {
            return Preferences::from_unnormalized(std::move(v));
        }
    }
}

void normalize_weights(std::vector<double>& w) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) {
        x /= total;
    }
}

// Systematic resampling followed by an isotropic jitter re-projected onto the
// unit sphere. Jittered particles receive fresh ids.
void resample_move(RobotBelief& b, const UpdateOptions& options) {
    const std::size_t m = b.size();
    Rng rng(derive_seed(b.seed, {b.generation, stream_tag("resample")}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, options.jitter_scale);

    std::vector<double> cumulative(m);
    std::partial_sum(b.weights.begin(), b.weights.end(), cumulative.begin());
    cumulative.back() = 1.0;

    const double start = unit(rng) / static_cast<double>(m);
    std::vector<Preferences> particles;
    std::vector<std::uint64_t> ids;
    particles.reserve(m);
    ids.reserve(m);
    std::size_t j = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double u = start + static_cast<double>(i) / static_cast<double>(m);
        while (j + 1 < m && cumulative[j] < u) {
            ++j;
        }
        std::vector<double> moved = b.particles[j].theta();
        for (double& x : moved) {
            x += jitter(rng);
        }
        if (std::sqrt(dot(moved, moved)) > 1e-12) {
            particles.push_back(Preferences::from_unnormalized(std::move(moved)));
            ids.push_back(b.next_particle_id++);
        } else {
            particles.push_back(b.particles[j]);
            ids.push_back(b.particle_ids[j]);
        }
    }
    b.particles = std::move(particles);
    b.particle_ids = std::move(ids);
    b.weights.assign(m, 1.0 / static_cast<double>(m));
}

}  // namespace

RobotBelief RobotBelief::from_particles(std::vector<Preferences> particles, std::vector<double> weights,
                                        std::uint64_t seed) {
    if (particles.empty()) {
        throw ConfigError("belief needs at least one particle");
    }
    const std::size_t m = particles.size();
    const std::size_t d = particles.front().dim();
    for (const Preferences& p : particles) {
        if (p.dim() != d) {
            throw ContractViolation("belief particles disagree on dimension");
        }
    }
    if (weights.empty()) {
        weights.assign(m, 1.0 / static_cast<double>(m));
    }
    if (weights.size() != m) {
        throw ContractViolation("weights and particles differ in length");
    }
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ContractViolation("belief weights must be finite and non-negative");
        }
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) {
        throw ContractViolation("belief weights sum to zero");
    }
    normalize_weights(weights);

    RobotBelief b;
    b.particles = std::move(particles);
    b.weights = std::move(weights);
    b.particle_ids.resize(m);
    std::iota(b.particle_ids.begin(), b.particle_ids.end(), std::uint64_t{0});
    b.next_particle_id = m;
    b.seed = seed;
    return b;
}

double RobotBelief::effective_sample_size() const {
    double sq = 0.0;
    for (double w : weights) {
        sq += w * w;
    }
    return 1.0 / sq;
}

std::size_t RobotBelief::heaviest_particle() const {
    return static_cast<std::size_t>(std::max_element(weights.begin(), weights.end()) - weights.begin());
}

std::vector<double> LearningSummary::as_vector() const {
    std::vector<double> z;
    z.reserve(mu.size() + sigma.size());
    z.insert(z.end(), mu.begin(), mu.end());
    z.insert(z.end(), sigma.begin(), sigma.end());
    return z;
}

LearningSummary LearningSummary::from_vector(std::span<const double> z) {
    if (z.size() % 2 != 0 || z.empty()) {
        throw ContractViolation("summary vector must have even, non-zero length");
    }
    const std::size_t d = z.size() / 2;
    LearningSummary s;
    s.mu.assign(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(d));
    s.sigma.assign(z.begin() + static_cast<std::ptrdiff_t>(d), z.end());
    return s;
}

InducedPolicyCache::InducedPolicyCache(std::span<const Trajectory> pool) : pool_(pool) {}

std::size_t InducedPolicyCache::index_for(std::uint64_t particle_id, const Preferences& prefs) {
    if (auto it = memo_.find(particle_id); it != memo_.end()) {
        ++hits_;
        return it->second;
    }
    const std::size_t idx = optimal_index(prefs, pool_);
    memo_.emplace(particle_id, idx);
    return idx;
}

RobotBelief init_belief(std::size_t d, std::size_t m, Rng& rng) {
    if (d < 1) {
        throw ConfigError("feature dimension must be at least 1");
    }
    if (m < 2) {
        throw ConfigError("robot belief needs at least 2 particles, got " + std::to_string(m));
    }
    std::vector<Preferences> particles;
    particles.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        particles.push_back(sample_unit_sphere(d, rng));
    }
    const std::uint64_t seed = rng();
    return RobotBelief::from_particles(std::move(particles), {}, seed);
}

RobotBelief update_belief(const RobotBelief& belief, const Question& question, const Answer& answer,
                          const UpdateOptions& options) {
    answer.validate_for(question);
    std::vector<double> w(belief.size());
    double total = 0.0;
    for (std::size_t j = 0; j < belief.size(); ++j) {
        w[j] = belief.weights[j] * answer_likelihood(question, belief.particles[j]).of(answer);
        total += w[j];
    }
    if (!(total > std::numeric_limits<double>::min()) || !std::isfinite(total)) {
        throw DegenerateEvidence("every particle assigns zero likelihood to the answer");
    }

    RobotBelief next = belief;
    next.weights = std::move(w);
    normalize_weights(next.weights);
    if (options.resample &&
        next.effective_sample_size() < options.ess_fraction * static_cast<double>(next.size())) {
        resample_move(next, options);
    }
    ++next.generation;
    return next;
}

std::size_t optimal_index(const Preferences& prefs, std::span<const Trajectory> pool) {
    if (pool.empty()) {
        throw ConfigError("trajectory pool is empty");
    }
    std::size_t best = 0;
    double best_reward = reward(pool[0], prefs);
    for (std::size_t i = 1; i < pool.size(); ++i) {
        const double r = reward(pool[i], prefs);
        if (r > best_reward || (r == best_reward && pool[i].id() < pool[best].id())) {
            best = i;
            best_reward = r;
        }
    }
    return best;
}

const Trajectory& optimal_trajectory(const Preferences& prefs, std::span<const Trajectory> pool) {
    return pool[optimal_index(prefs, pool)];
}

std::vector<std::size_t> induced_indices(const RobotBelief& belief, std::span<const Trajectory> pool,
                                         InducedPolicyCache* cache) {
    if (cache != nullptr && (cache->pool().data() != pool.data() || cache->pool().size() != pool.size())) {
        throw ContractViolation("policy cache was built for a different pool");
    }
    std::vector<std::size_t> out(belief.size());
    for (std::size_t j = 0; j < belief.size(); ++j) {
        out[j] = cache != nullptr ? cache->index_for(belief.particle_ids[j], belief.particles[j])
                                  : optimal_index(belief.particles[j], pool);
    }
    return out;
}

LearningSummary learning_summary(const RobotBelief& belief, std::span<const Trajectory> pool,
                                 InducedPolicyCache* cache) {
    const std::vector<std::size_t> induced = induced_indices(belief, pool, cache);
    const std::size_t d = pool.front().dim();
    LearningSummary s;
    s.mu.assign(d, 0.0);
    s.sigma.assign(d, 0.0);
    for (std::size_t j = 0; j < belief.size(); ++j) {
        const FeatureVector& f = pool[induced[j]].features();
        for (std::size_t c = 0; c < d; ++c) {
            s.mu[c] += belief.weights[j] * f[c];
        }
    }
    for (std::size_t j = 0; j < belief.size(); ++j) {
        const FeatureVector& f = pool[induced[j]].features();
        for (std::size_t c = 0; c < d; ++c) {
            const double dev = f[c] - s.mu[c];
            s.sigma[c] += belief.weights[j] * dev * dev;
        }
    }
    for (double& v : s.sigma) {
        v = std::sqrt(std::max(0.0, v));
    }
    return s;
}

double regret(const RobotBelief& belief, const Preferences& true_prefs, std::span<const Trajectory> pool,
              InducedPolicyCache* cache) {
    const double best = reward(optimal_trajectory(true_prefs, pool), true_prefs);
    const std::vector<std::size_t> induced = induced_indices(belief, pool, cache);
    double total = 0.0;
    for (std::size_t j = 0; j < belief.size(); ++j) {
        total += belief.weights[j] * (best - reward(pool[induced[j]], true_prefs));
    }
    return std::max(0.0, total);
}

std::vector<double> posterior_mean(const RobotBelief& belief) {
    std::vector<double> mean(belief.dim(), 0.0);
    for (std::size_t j = 0; j < belief.size(); ++j) {
        const auto& theta = belief.particles[j].theta();
        for (std::size_t c = 0; c < mean.size(); ++c) {
            mean[c] += belief.weights[j] * theta[c];
        }
    }
    return mean;
}

LearnedTrajectory learned_trajectory(const RobotBelief& belief, std::span<const Trajectory> pool) {
    LearnedTrajectory out;
    std::vector<double> mean = posterior_mean(belief);
    if (std::sqrt(dot(mean, mean)) > 1e-12) {
        out.index = optimal_index(Preferences::from_unnormalized(std::move(mean)), pool);
    } else {
        out.used_fallback = true;
        out.index = optimal_index(belief.particles[belief.heaviest_particle()], pool);
    }
    return out;
}

}  // namespace revealq
