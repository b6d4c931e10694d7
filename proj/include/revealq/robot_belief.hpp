#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "revealq/core.hpp"
#include "revealq/random.hpp"

namespace revealq {

// Weighted particle approximation of the posterior over unit preference
// vectors. Updates return a new value; the resample-move step draws from a
// stream derived from (seed, generation) so an update is a pure function of
// (belief, question, answer).
struct RobotBelief {
    std::vector<Preferences> particles;
    std::vector<std::uint64_t> particle_ids;
    std::vector<double> weights;
    std::uint64_t generation = 0;
    std::uint64_t seed = 0;
    std::uint64_t next_particle_id = 0;

    std::size_t size() const { return particles.size(); }
    std::size_t dim() const { return particles.front().dim(); }

    // Builds a belief over explicit particles. Empty `weights` means uniform.
    static RobotBelief from_particles(std::vector<Preferences> particles,
                                      std::vector<double> weights = {}, std::uint64_t seed = 0);

    double effective_sample_size() const;
    std::size_t heaviest_particle() const;
};

// Compact summary of the behavior a belief induces: mean and standard
// deviation of the features of each particle's optimal trajectory.
struct LearningSummary {
    std::vector<double> mu;
    std::vector<double> sigma;

    std::size_t dim() const { return mu.size(); }
    std::vector<double> as_vector() const;
    static LearningSummary from_vector(std::span<const double> z);
};

struct UpdateOptions {
    bool resample = true;
    double ess_fraction = 0.5;
    double jitter_scale = 0.05;
};

// Memo of particle id -> argmax index over one fixed pool. Bound to the pool
// it was built with; not thread-safe.
class InducedPolicyCache {
public:
    explicit InducedPolicyCache(std::span<const Trajectory> pool);

    std::size_t index_for(std::uint64_t particle_id, const Preferences& prefs);
    std::span<const Trajectory> pool() const { return pool_; }
    std::size_t hits() const { return hits_; }

private:
    std::span<const Trajectory> pool_;
    std::unordered_map<std::uint64_t, std::size_t> memo_;
    std::size_t hits_ = 0;
};

RobotBelief init_belief(std::size_t d, std::size_t m, Rng& rng);

// Bayes update with the pairwise answer model, followed by resample-move when
// the effective sample size drops below ess_fraction * M. Throws
// DegenerateEvidence (input left untouched) when every likelihood vanishes.
RobotBelief update_belief(const RobotBelief& belief, const Question& question, const Answer& answer,
                          const UpdateOptions& options = {});

// Index into `pool` of the reward-maximizing trajectory; ties go to the
// lowest trajectory id. Throws ConfigError on an empty pool.
std::size_t optimal_index(const Preferences& prefs, std::span<const Trajectory> pool);
const Trajectory& optimal_trajectory(const Preferences& prefs, std::span<const Trajectory> pool);

// Optimal pool index for every particle, in particle order.
std::vector<std::size_t> induced_indices(const RobotBelief& belief, std::span<const Trajectory> pool,
                                         InducedPolicyCache* cache = nullptr);

LearningSummary learning_summary(const RobotBelief& belief, std::span<const Trajectory> pool,
                                 InducedPolicyCache* cache = nullptr);

double regret(const RobotBelief& belief, const Preferences& true_prefs,
              std::span<const Trajectory> pool, InducedPolicyCache* cache = nullptr);

// Weighted mean of the particles, not normalized.
std::vector<double> posterior_mean(const RobotBelief& belief);

struct LearnedTrajectory {
    std::size_t index = 0;       // into the pool
    bool used_fallback = false;  // posterior mean had zero norm; heaviest particle used
};

// Pool trajectory optimal for the normalized posterior-mean preferences.
LearnedTrajectory learned_trajectory(const RobotBelief& belief, std::span<const Trajectory> pool);

}  // namespace revealq
