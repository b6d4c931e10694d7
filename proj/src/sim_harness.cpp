#include "revealq/sim_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "revealq/errors.hpp"

namespace revealq {
namespace {

Answer rational_answer(const Question& q, const Preferences& prefs) {
    const double a = reward(q.at(0), prefs);
    const double b = reward(q.at(1), prefs);
    if (a > b) return Answer::choice(0);
    if (b > a) return Answer::choice(1);
    return Answer::idk();
}

double metric_value(const RoundRecord& r, const std::string& metric) {
    if (metric == "human_error") return r.human_error;
    if (metric == "regret") return r.regret;
    if (metric == "info_gain") return r.info_gain;
    if (metric == "convergence") return r.convergence;
    if (metric == "difficulty") return r.answered_idk ? 1.0 : 0.0;
    throw ContractViolation("unknown metric '" + metric + "'");
}

std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) {
            ranks[order[t]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

}  // namespace

std::string to_string(Teacher t) { return t == Teacher::Noisy ? "noisy" : "rational"; }

Teacher parse_teacher(const std::string& name) {
    if (name == "noisy") return Teacher::Noisy;
    if (name == "rational") return Teacher::Rational;
    throw ValidationError("unknown teacher '" + name + "' (expected noisy or rational)");
}

void ExperimentConfig::validate() const {
    if (environment.name.empty()) {
        throw ConfigError("environment.name is required");
    }
    if (environment.name != "tabletop" && environment.name != "driving" && environment.name != "synthetic") {
        throw ConfigError("environment.name must be tabletop, driving or synthetic");
    }
    if (environment.pool_size < 2) throw ConfigError("environment.pool_size must be at least 2");
    if (environment.dim < 1) throw ConfigError("environment.dim must be at least 1");
    if (users < 1) throw ConfigError("users must be at least 1");
    if (rounds < 1) throw ConfigError("rounds must be at least 1");
    if (candidates < 1) throw ConfigError("candidates must be at least 1");
    if (particles < 2) throw ConfigError("particles must be at least 2");
    if (human_candidates < 2) throw ConfigError("human_candidates must be at least 2");
    if (memory < 1) throw ConfigError("memory must be at least 1");
    if (strategies.empty()) throw ConfigError("strategies must list at least one strategy");
    std::vector<std::string> names;
    for (const SelectionConfig& s : strategies) {
        s.validate();
        names.push_back(s.display_name());
    }
    std::sort(names.begin(), names.end());
    if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
        throw ConfigError("strategy labels must be unique");
    }
}

UserSeeds UserSeeds::derive(std::uint64_t base_seed, std::size_t user) {
    const std::uint64_t u = static_cast<std::uint64_t>(user);
    UserSeeds s;
    s.environment = environment_seed(base_seed);
    s.true_prefs = derive_seed(base_seed, {u, stream_tag("true_prefs")});
    s.robot_belief = derive_seed(base_seed, {u, stream_tag("robot_belief")});
    s.human_belief = derive_seed(base_seed, {u, stream_tag("human_belief")});
    s.candidates = derive_seed(base_seed, {u, stream_tag("candidates")});
    s.answers = derive_seed(base_seed, {u, stream_tag("answers")});
    s.selection = derive_seed(base_seed, {u, stream_tag("selection")});
    return s;
}

std::uint64_t environment_seed(std::uint64_t base_seed) {
    return derive_seed(base_seed, {stream_tag("environment")});
}

Preferences draw_true_prefs(std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (;;) {
        std::vector<double> v(d);
        for (double& x : v) {
            x = normal(rng);
        }
        if (std::sqrt(dot(v, v)) > 1e-12) {
            return Preferences::from_unnormalized(std::move(v));
        }
    }
}

UserStart make_user_start(const Environment& env, const SelectionConfig& strategy, const ExperimentConfig& config,
                          const UserSeeds& seeds) {
    Rng robot_rng(seeds.robot_belief);
    Rng human_rng(seeds.human_belief);
    HumanBelief observer = init_human_belief(env.dim(), config.human_candidates, config.memory, human_rng);
    HumanBelief model = with_memory(observer, strategy.model_memory);
    return UserStart{draw_true_prefs(env.dim(), seeds.true_prefs), init_belief(env.dim(), config.particles, robot_rng),
                     std::move(observer), std::move(model)};
}

std::vector<RoundRecord> run_user(const Environment& env, const SelectionConfig& strategy, UserStart start,
                                  const UserSeeds& seeds, const UserRunOptions& options) {
    const std::span<const Trajectory> pool(env.pool);
    InducedPolicyCache cache(pool);
    SelectionConfig selection = strategy;
    selection.candidate_count = options.candidates;

    RobotBelief belief = std::move(start.robot);
    HumanBelief observer = std::move(start.observer);
    HumanBelief model = std::move(start.robot_model);
    LearningSummary z_star = learning_summary(belief, pool, &cache);

    std::vector<RoundRecord> records;
    records.reserve(options.rounds);
    for (std::size_t round = 1; round <= options.rounds; ++round) {
        const std::uint64_t r = static_cast<std::uint64_t>(round);
        Rng candidate_rng(derive_seed(seeds.candidates, {r}));
        Rng selection_rng(derive_seed(seeds.selection, {r}));
        Rng answer_rng(derive_seed(seeds.answers, {r}));

        const std::vector<Question> candidates = candidate_questions(pool, options.candidates, candidate_rng);
        const Selection sel = select_question(candidates, belief, model, z_star, selection, selection_rng);
        const Question question = sel.chosen().question.with_index(round);

        RoundRecord rec;
        rec.user = options.user;
        rec.round = round;
        rec.strategy = strategy.display_name();
        rec.info_gain = sel.chosen().info_gain;
        rec.reveal_score = sel.chosen().reveal_score;
        rec.first = question.at(0).id();
        rec.second = question.at(1).id();
        const ConvergenceResult conv = convergence_metric(question, belief, pool);
        rec.convergence = conv.value;
        rec.convergence_fallback = conv.used_fallback;
        if (options.dump_scores) {
            rec.scores.reserve(sel.scored.size());
            for (std::size_t i = 0; i < sel.scored.size(); ++i) {
                const ScoredQuestion& s = sel.scored[i];
                rec.scores.push_back({i, s.question.at(0).id(), s.question.at(1).id(), s.info_gain, s.reveal_score,
                                      s.combined});
            }
        }

        observer = observe_question(observer, question);
        model = observe_question(model, question);
        const Answer answer = options.teacher == Teacher::Noisy ? sample_answer(question, start.true_prefs, answer_rng)
                                                                : rational_answer(question, start.true_prefs);
        rec.answered_idk = answer.is_idk();
        if (!answer.is_idk()) {
            rec.chosen_slot = answer.slot();
        }

        belief = update_belief(belief, question, answer);
        z_star = learning_summary(belief, pool, &cache);
        rec.human_error = human_error(observer, z_star);
        rec.regret = regret(belief, start.true_prefs, pool, &cache);
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<AggregateRow> aggregate(const std::vector<RoundRecord>& records,
                                    const std::vector<std::string>& strategy_order) {
    std::map<std::pair<std::string, std::size_t>, std::vector<const RoundRecord*>> cells;
    std::size_t max_round = 0;
    for (const RoundRecord& r : records) {
        cells[{r.strategy, r.round}].push_back(&r);
        max_round = std::max(max_round, r.round);
    }
    std::vector<AggregateRow> rows;
    for (const std::string& strategy : strategy_order) {
        for (std::size_t round = 1; round <= max_round; ++round) {
            auto it = cells.find({strategy, round});
            if (it == cells.end()) {
                continue;
            }
            for (const char* metric : kMetrics) {
                const auto& members = it->second;
                double sum = 0.0;
                for (const RoundRecord* r : members) {
                    sum += metric_value(*r, metric);
                }
                const double n = static_cast<double>(members.size());
                const double mean = sum / n;
                double sq = 0.0;
                for (const RoundRecord* r : members) {
                    const double dev = metric_value(*r, metric) - mean;
                    sq += dev * dev;
                }
                rows.push_back({strategy, round, metric, mean, std::sqrt(sq / n), members.size()});
            }
        }
    }
    return rows;
}

double ExperimentResult::mean(const std::string& strategy, const std::string& metric, std::size_t round) const {
    for (const AggregateRow& row : aggregate) {
        if (row.strategy == strategy && row.metric == metric && row.round == round) {
            return row.mean;
        }
    }
    throw ContractViolation("no aggregate for " + strategy + "/" + metric + " at round " + std::to_string(round));
}

std::vector<double> ExperimentResult::curve(const std::string& strategy, const std::string& metric) const {
    std::vector<double> out;
    for (const AggregateRow& row : aggregate) {
        if (row.strategy == strategy && row.metric == metric) {
            out.push_back(row.mean);
        }
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    Rng env_rng(environment_seed(config.seed));
    const Environment env =
        build_environment(config.environment.name, config.environment.pool_size, config.environment.dim, env_rng);

    const std::size_t n_strategies = config.strategies.size();
    const std::size_t n_cells = n_strategies * config.users;
    std::vector<std::vector<RoundRecord>> cell_records(n_cells);
    std::vector<std::optional<CellFailure>> cell_failures(n_cells);

    UserRunOptions base_options;
    base_options.rounds = config.rounds;
    base_options.candidates = config.candidates;
    base_options.teacher = config.teacher;
    base_options.dump_scores = config.dump_scores;

    // Cell c covers strategy c / users, user c % users.
    auto run_cell = [&](std::size_t c) {
        const SelectionConfig& strategy = config.strategies[c / config.users];
        const std::size_t user = c % config.users;
        try {
            const UserSeeds seeds = UserSeeds::derive(config.seed, user);
            UserRunOptions options = base_options;
            options.user = user;
            cell_records[c] = run_user(env, strategy, make_user_start(env, strategy, config, seeds), seeds, options);
        } catch (const std::exception& e) {
            cell_failures[c] = CellFailure{strategy.display_name(), user, e.what()};
        }
    };

    std::size_t workers = config.parallelism != 0 ? config.parallelism
                                                   : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n_cells);
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_cells; ++c) {
            run_cell(c);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t c = next.fetch_add(1); c < n_cells; c = next.fetch_add(1)) {
                    run_cell(c);
                }
            });
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }

    ExperimentResult result;
    std::vector<std::string> order;
    for (const SelectionConfig& s : config.strategies) {
        order.push_back(s.display_name());
    }
    for (std::size_t c = 0; c < n_cells; ++c) {
        if (cell_failures[c]) {
            result.failures.push_back(*cell_failures[c]);
            continue;
        }
        for (RoundRecord& r : cell_records[c]) {
            result.records.push_back(std::move(r));
        }
    }
    result.aggregate = aggregate(result.records, order);
    return result;
}

SweepParameter parse_sweep_parameter(const std::string& name) {
    if (name == "lambda") return SweepParameter::Lambda;
    if (name == "k" || name == "memory") return SweepParameter::Memory;
    throw ValidationError("unknown sweep parameter '" + name + "' (expected lambda or k)");
}

std::string to_string(SweepParameter p) { return p == SweepParameter::Lambda ? "lambda" : "k"; }

ExperimentConfig apply_sweep_value(const ExperimentConfig& base, SweepParameter parameter, double value) {
    ExperimentConfig cfg = base;
    if (parameter == SweepParameter::Lambda) {
        if (!(value >= 0.0)) {
            throw ConfigError("lambda values must be non-negative");
        }
        bool any = false;
        for (SelectionConfig& s : cfg.strategies) {
            if (s.strategy == Strategy::Combined) {
                s.lambda = value;
                any = true;
            }
        }
        if (!any) {
            throw ConfigError("lambda sweep needs at least one combined strategy");
        }
    } else {
        if (!(value >= 1.0) || value != std::floor(value)) {
            throw ConfigError("k values must be positive integers");
        }
        cfg.memory = static_cast<std::size_t>(value);
    }
    return cfg;
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& base, SweepParameter parameter,
                                  const std::vector<double>& values) {
    if (values.empty()) {
        throw ConfigError("sweep needs at least one value");
    }
    std::vector<SweepPoint> out;
    out.reserve(values.size());
    for (double v : values) {
        out.push_back({v, run_experiment(apply_sweep_value(base, parameter, v))});
    }
    return out;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ContractViolation("spearman needs two equal-length series of at least 2 values");
    }
    const std::vector<double> rx = average_ranks(x);
    const std::vector<double> ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) {
        return 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace revealq
