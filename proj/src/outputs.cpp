#include "revealq/outputs.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "revealq/errors.hpp"
#include "revealq/json_io.hpp"

namespace revealq {
namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    return quoted + "\"";
}

std::string format_value(double v) {
    std::ostringstream s;
    s << std::setprecision(12) << v;
    return s.str();
}

std::string value_label(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

Json manifest(const ExperimentConfig& config, const ExperimentResult& result, const OutputFiles& files) {
    Json users = Json::array();
    for (std::size_t u = 0; u < config.users; ++u) {
        const UserSeeds s = UserSeeds::derive(config.seed, u);
        users.push_back(Json{{"user", u},
                             {"true_prefs", s.true_prefs},
                             {"robot_belief", s.robot_belief},
                             {"human_belief", s.human_belief},
                             {"candidates", s.candidates},
                             {"answers", s.answers},
                             {"selection", s.selection}});
    }
    Json failures = Json::array();
    for (const CellFailure& f : result.failures) {
        failures.push_back(Json{{"strategy", f.strategy}, {"user", f.user}, {"message", f.message}});
    }
    Json out_files{{"rounds", files.rounds.filename().string()},
                   {"aggregate", files.aggregate.filename().string()}};
    if (files.scores) {
        out_files["scores"] = files.scores->filename().string();
    }
    return Json{{"tool", "revealq"},
                {"config", to_json(config)},
                {"seeds", Json{{"base", config.seed}, {"environment", environment_seed(config.seed)}, {"users", users}}},
                {"records", result.records.size()},
                {"failed_cells", result.failures.size()},
                {"failures", std::move(failures)},
                {"files", std::move(out_files)}};
}

}  // namespace

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
    out << "strategy,round,metric,mean,std\n";
    for (const AggregateRow& r : rows) {
        out << csv_field(r.strategy) << ',' << r.round << ',' << r.metric << ',' << format_value(r.mean) << ','
            << format_value(r.stddev) << '\n';
    }
}

OutputFiles write_experiment_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                                     const ExperimentResult& result) {
    std::filesystem::create_directories(dir);
    OutputFiles files{dir / "rounds.jsonl", dir / "aggregate.csv", dir / "manifest.json", std::nullopt};

    {
        std::ofstream out = open_output(files.rounds);
        for (const RoundRecord& r : result.records) {
            out << to_json(r).dump() << '\n';
        }
    }
    {
        std::ofstream out = open_output(files.aggregate);
        write_aggregate_csv(out, result.aggregate);
    }
    if (config.dump_scores) {
        files.scores = dir / "scores.jsonl";
        std::ofstream out = open_output(*files.scores);
        for (const RoundRecord& r : result.records) {
            out << scores_json(r).dump() << '\n';
        }
    }
    {
        std::ofstream out = open_output(files.manifest);
        out << manifest(config, result, files).dump(2) << '\n';
    }
    return files;
}

std::filesystem::path write_sweep_outputs(const std::filesystem::path& dir, const ExperimentConfig& base,
                                          SweepParameter parameter, const std::vector<SweepPoint>& points) {
    std::filesystem::create_directories(dir);
    const std::string name = to_string(parameter);
    const std::filesystem::path summary = dir / "sweep_summary.csv";
    std::ofstream out = open_output(summary);
    out << "parameter,value,strategy,metric,round,mean,std\n";
    for (const SweepPoint& p : points) {
        const ExperimentConfig cfg = apply_sweep_value(base, parameter, p.value);
        write_experiment_outputs(dir / (name + "=" + value_label(p.value)), cfg, p.result);
        for (const AggregateRow& r : p.result.aggregate) {
            if (r.round != cfg.rounds) {
                continue;
            }
            out << name << ',' << value_label(p.value) << ',' << csv_field(r.strategy) << ',' << r.metric << ','
                << r.round << ',' << format_value(r.mean) << ',' << format_value(r.stddev) << '\n';
        }
    }
    return summary;
}

std::filesystem::path data_dir(const std::filesystem::path& fallback) {
    if (const char* env = std::getenv("REVEALQ_DATA_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return fallback;
}

}  // namespace revealq
