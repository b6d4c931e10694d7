#pragma once

// JSON encodings shared by the CLI outputs, the session store and the HTTP
// API. Objects keep insertion order so written files are stable.

#include <string>
#include <vector>

#include "json.hpp"
#include "revealq/core.hpp"
#include "revealq/environments.hpp"
#include "revealq/human_model.hpp"
#include "revealq/question_select.hpp"
#include "revealq/robot_belief.hpp"
#include "revealq/sim_harness.hpp"

namespace revealq {

using Json = nlohmann::ordered_json;

// Decoders throw ValidationError naming the offending field.

// True for integers >= 0, whether stored signed or unsigned.
bool is_non_negative_integer(const Json& j);

Json to_json(const Trajectory& t);
Trajectory trajectory_from_json(const Json& j);

Json to_json(const Question& q);
Question question_from_json(const Json& j);

// {"kind": "choice", "slot": 0|1} or {"kind": "idk"}.
Json to_json(const Answer& a);
Answer answer_from_json(const Json& j);

// Full snapshot: particles, ids, weights, generation and stream state.
Json to_json(const RobotBelief& b);
RobotBelief belief_from_json(const Json& j);

// {"features": [...], "mu": [...], "sigma": [...]}
Json to_json(const LearningSummary& z, const std::vector<std::string>& feature_names);

// Posterior-mean summary, weight entropy (nats) and the remembered window.
Json human_belief_summary(const HumanBelief& b, const std::vector<std::string>& feature_names);

Json to_json(const Scene& s);
// Name, feature names, scene (null without geometry), normalization and pool.
Json to_json(const Environment& env);

Json to_json(const SelectionConfig& s);
Json to_json(const ExperimentConfig& c);

// One line of rounds.jsonl; per-candidate scores are written separately.
Json to_json(const RoundRecord& r);
// One line of scores.jsonl.
Json scores_json(const RoundRecord& r);

// Parses and validates an experiment config. Failures throw ConfigError
// formatted "<source>:<line>: <field>: <message>".
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source = "config");

}  // namespace revealq
