// revealq: batch simulations, parameter sweeps and the live session service.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "revealq/errors.hpp"
#include "revealq/json_io.hpp"
#include "revealq/outputs.hpp"
#include "revealq/service.hpp"
#include "revealq/sim_harness.hpp"

namespace fs = std::filesystem;
using namespace revealq;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitInvalidConfig = 2;

struct RunFlags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> parallelism;
};

ExperimentConfig load_config(const RunFlags& flags) {
    std::ifstream in(flags.config, std::ios::binary);
    if (!in) {
        throw ConfigError(flags.config + ": cannot open config file");
    }
    std::ostringstream text;
    text << in.rdbuf();
    ExperimentConfig cfg = parse_experiment_config(text.str(), flags.config);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.parallelism) cfg.parallelism = *flags.parallelism;
    return cfg;
}

fs::path output_dir(const RunFlags& flags, const std::string& suffix = "") {
    if (!flags.out.empty()) {
        return flags.out;
    }
    return data_dir() / "results" / (fs::path(flags.config).stem().string() + suffix);
}

void report_failures(const ExperimentResult& result) {
    for (const CellFailure& f : result.failures) {
        std::cerr << "warning: " << f.strategy << " user " << f.user << " failed: " << f.message << '\n';
    }
}

int simulate(const RunFlags& flags) {
    const ExperimentConfig cfg = load_config(flags);
    const ExperimentResult result = run_experiment(cfg);
    report_failures(result);
    const OutputFiles files = write_experiment_outputs(output_dir(flags), cfg, result);
    std::cout << files.aggregate.string() << '\n';
    return 0;
}

std::vector<double> parse_values(const std::string& list) {
    std::vector<double> out;
    std::stringstream in(list);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) {
            throw ConfigError("--values: '" + item + "' is not a number");
        }
        out.push_back(v);
    }
    if (out.empty()) {
        throw ConfigError("--values must list at least one value");
    }
    return out;
}

int sweep(const RunFlags& flags, const std::string& param, const std::string& values) {
    const ExperimentConfig cfg = load_config(flags);
    SweepParameter parameter;
    try {
        parameter = parse_sweep_parameter(param);
    } catch (const ValidationError& e) {
        throw ConfigError(std::string("--param: ") + e.what());
    }
    const std::vector<SweepPoint> points = run_sweep(cfg, parameter, parse_values(values));
    for (const SweepPoint& p : points) {
        report_failures(p.result);
    }
    std::cout << write_sweep_outputs(output_dir(flags, "-" + to_string(parameter) + "-sweep"), cfg, parameter, points)
                     .string()
              << '\n';
    return 0;
}

std::pair<std::string, int> split_bind(const std::string& bind) {
    const std::size_t colon = bind.rfind(':');
    if (colon == std::string::npos) {
        throw ConfigError("--bind must be HOST:PORT, got '" + bind + "'");
    }
    int port = -1;
    try {
        port = std::stoi(bind.substr(colon + 1));
    } catch (const std::exception&) {
    }
    if (port < 0 || port > 65535) {
        throw ConfigError("--bind has an invalid port in '" + bind + "'");
    }
    return {bind.substr(0, colon), port};
}

int serve(const std::string& bind, const std::string& config, bool debug_panel, std::int64_t ttl) {
    ServiceOptions options;
    options.sessions_dir = data_dir() / "sessions";
    options.debug_panel = debug_panel;
    options.ttl_seconds = ttl;
    if (!config.empty()) {
        RunFlags flags;
        flags.config = config;
        const ExperimentConfig cfg = load_config(flags);
        options.limits.particles = cfg.particles;
        options.limits.human_candidates = cfg.human_candidates;
        options.limits.candidates = cfg.candidates;
    }
    const auto [host, port] = split_bind(bind);

    // Handle SIGINT/SIGTERM on a dedicated thread so shutdown runs outside a signal handler.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    Service service(options);
    for (const std::string& e : service.store().load_errors()) {
        std::cerr << "warning: skipped session snapshot " << e << '\n';
    }
    const int bound = service.bind(host, port);
    std::cerr << "revealq: serving on " << host << ':' << bound << " (sessions in " << options.sessions_dir.string()
              << ", " << service.store().size() << " loaded)\n";

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        service.stop();
    });
    service.run();
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active preference learning with revealing questions"};
    app.require_subcommand(1);

    RunFlags sim_flags;
    CLI::App* sim = app.add_subcommand("simulate", "Run simulated users under each strategy");
    sim->add_option("--config", sim_flags.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", sim_flags.out, "Output directory (default: $REVEALQ_DATA_DIR/results/<config>)");
    sim->add_option("--seed", sim_flags.seed, "Override the base seed");
    sim->add_option("--parallelism", sim_flags.parallelism, "Worker threads (0: all cores)");

    RunFlags sweep_flags;
    std::string param;
    std::string values;
    CLI::App* sw = app.add_subcommand("sweep", "Repeat an experiment over values of lambda or k");
    sw->add_option("--config", sweep_flags.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sw->add_option("--param", param, "lambda or k")->required();
    sw->add_option("--values", values, "Comma-separated values, e.g. 0.5,1,10")->required();
    sw->add_option("--out", sweep_flags.out, "Output directory");
    sw->add_option("--seed", sweep_flags.seed, "Override the base seed");
    sw->add_option("--parallelism", sweep_flags.parallelism, "Worker threads (0: all cores)");

    std::string bind = "127.0.0.1:8080";
    std::string serve_config;
    bool debug_panel = false;
    std::int64_t ttl = 24 * 3600;
    CLI::App* srv = app.add_subcommand("serve", "Host live teaching sessions over HTTP");
    srv->add_option("--bind", bind, "HOST:PORT to listen on")->capture_default_str();
    srv->add_option("--config", serve_config, "Experiment config supplying particles, human_candidates, candidates")
        ->check(CLI::ExistingFile);
    srv->add_flag("--debug-panel", debug_panel, "Expose GET /sessions/{id}/debug");
    srv->add_option("--ttl", ttl, "Seconds of inactivity before a session expires (0: never)")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return simulate(sim_flags);
        if (sw->parsed()) return sweep(sweep_flags, param, values);
        if (srv->parsed()) return serve(bind, serve_config, debug_panel, ttl);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalidConfig;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalidConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}
