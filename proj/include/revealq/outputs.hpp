#pragma once

// Result files written by the simulate and sweep commands.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "revealq/sim_harness.hpp"

namespace revealq {

struct OutputFiles {
    std::filesystem::path rounds;     // rounds.jsonl
    std::filesystem::path aggregate;  // aggregate.csv
    std::filesystem::path manifest;   // manifest.json
    std::optional<std::filesystem::path> scores;  // scores.jsonl, only with dump_scores
};

// Writes one experiment's outputs into `dir`, creating it if needed.
OutputFiles write_experiment_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                                     const ExperimentResult& result);

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);

// One subdirectory per value ("lambda=10", "k=3") plus sweep_summary.csv with
// the final-round means. Returns the summary path.
std::filesystem::path write_sweep_outputs(const std::filesystem::path& dir, const ExperimentConfig& base,
                                          SweepParameter parameter, const std::vector<SweepPoint>& points);

// Results/session root: $REVEALQ_DATA_DIR when set, otherwise `fallback`.
std::filesystem::path data_dir(const std::filesystem::path& fallback = "revealq-data");

}  // namespace revealq
