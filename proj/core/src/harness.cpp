// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "oir/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <sstream>

#include "oir/errors.hpp"

namespace oir {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config field '" + key + "': cannot parse '" + value + "' as a number");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const int x = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config field '" + key + "': cannot parse '" + value +
                          "' as an integer");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "on" || value == "1") return true;
    if (value == "false" || value == "off" || value == "0") return false;
    throw ConfigError("config field '" + key + "': expected true/false, got '" + value + "'");
}

std::vector<std::uint64_t> parse_seeds(const std::string& value) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(value);
    std::string item;
    try {
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            // "a..b" expands to the inclusive range
            const auto dots = item.find("..");
            if (dots != std::string::npos) {
                const std::uint64_t lo = std::stoull(item.substr(0, dots));
                const std::uint64_t hi = std::stoull(item.substr(dots + 2));
                for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
            } else {
                seeds.push_back(std::stoull(item));
            }
        }
    } catch (const std::exception&) {
        throw ConfigError("config field 'seeds': cannot parse '" + value +
                          "' (expected integers, ranges a..b, comma-separated)");
    }
    return seeds;
}

void set_field(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "env") cfg.env = value;
    else if (key == "map") { cfg.map_path = value; if (cfg.env == "simple") cfg.env = "map"; }
    else if (key == "algorithm") cfg.algorithm = value;
    else if (key == "kappa") cfg.kappa = parse_double(key, value);
    else if (key == "alpha") cfg.alpha = parse_double(key, value);
    else if (key == "beta") cfg.beta = parse_double(key, value);
    else if (key == "tau") cfg.tau = parse_double(key, value);
    else if (key == "K") cfg.K = parse_int(key, value);
    else if (key == "episodes") cfg.episodes = parse_int(key, value);
    else if (key == "seeds") cfg.seeds = parse_seeds(value);
    else if (key == "density_mode") cfg.density_mode = value;
    else if (key == "projection_bound") cfg.projection_bound = parse_double(key, value);
    else if (key == "project") cfg.project = parse_bool(key, value);
    else if (key == "ema_init_cost") cfg.ema_init_cost = parse_double(key, value);
    else if (key == "ema_init_entropy") cfg.ema_init_entropy = parse_double(key, value);
    else if (key == "start") cfg.start = value;
    else if (key == "c_goal") cfg.c_goal = parse_double(key, value);
    else if (key == "c_allowed") cfg.c_allowed = parse_double(key, value);
    else if (key == "c_blocked") cfg.c_blocked = parse_double(key, value);
    else if (key == "eta") cfg.eta = parse_double(key, value);
    else if (key == "out") cfg.out = value;
    else if (key == "name") cfg.name = value;
    else throw ConfigError("unknown config field '" + key + "'");
}

const std::vector<std::string> kAlgorithms = {
    "id_reinforce",
    "idac",
    "vanilla_ac",
    "max_state_entropy_reinforce",
    "max_state_entropy_ac",
    "max_state_action_entropy_reinforce",
    "max_state_action_entropy_ac",
    "exact_pgd",
};

}  // namespace

void RunConfig::validate() const {
    if (std::find(kAlgorithms.begin(), kAlgorithms.end(), algorithm) == kAlgorithms.end())
        throw ConfigError("config field 'algorithm': unknown algorithm '" + algorithm + "'");
    if (alpha <= 0.0) throw ConfigError("config field 'alpha': step size must be > 0");
    if (beta <= 0.0) throw ConfigError("config field 'beta': step size must be > 0");
    if (tau <= 0.0 || tau > 1.0) throw ConfigError("config field 'tau': must lie in (0, 1]");
    if (K < 1) throw ConfigError("config field 'K': episode length must be >= 1");
    if (episodes < 1) throw ConfigError("config field 'episodes': must be >= 1");
    if (seeds.empty()) throw ConfigError("config field 'seeds': at least one seed required");
    std::vector<std::uint64_t> sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ConfigError("config field 'seeds': seeds must be distinct");
    if (density_mode != "exact" && density_mode != "empirical" &&
        density_mode != "cumulative")
        throw ConfigError("config field 'density_mode': expected exact|empirical|cumulative");
    if (projection_bound <= 0.0)
        throw ConfigError("config field 'projection_bound': must be > 0");
    if (kappa < 0.0) throw ConfigError("config field 'kappa': must be >= 0");
    if (!start.empty() && start != "fixed" && start != "uniform" && start != "stationary")
        throw ConfigError("config field 'start': expected fixed|uniform|stationary");
    if (ema_init_cost <= 0.0 || ema_init_entropy <= 0.0)
        throw ConfigError("config field 'ema_init_*': moving averages must start > 0");
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        set_field(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void apply_override(RunConfig& config, const std::string& key_equals_value) {
    const auto eq = key_equals_value.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key=value, got '" + key_equals_value + "'");
    set_field(config, trim(key_equals_value.substr(0, eq)),
              trim(key_equals_value.substr(eq + 1)));
}

BuiltEnv build_env_by_name(const std::string& name, double c_goal, double c_allowed,
                           double c_blocked, const std::string& map_path) {
    BuiltEnv env;
    env.name = name;
    if (name == "simple") {
        env.mdp = build_simple_env();
        env.start = StartUniform{};
        env.fixed_start = false;
        return env;
    }
    double g = c_goal;
    double a = c_allowed;
    double b = c_blocked;
    GridSpec spec;
    if (name == "map") {
        if (map_path.empty()) throw ConfigError("config field 'map': path required for env=map");
        if (g < 0) g = 1.0;
        if (a < 0) a = 10.0;
        if (b < 0) b = 100.0;
        spec = load_map_file(map_path, g, a, b);
    } else if (name == "gridworld1" || name == "gridworld2" || name == "gridworld3" ||
               name == "large_gridworld") {
        if (name == "large_gridworld") {
            if (g < 0) g = 0.1;
            if (a < 0) a = 5.0;
            if (b < 0) b = 10.0;
        } else {
            if (g < 0) g = 1.0;
            if (a < 0) a = 10.0;
            if (b < 0) b = 100.0;
        }
        spec = parse_map(builtin_map(name), g, a, b);
    } else {
        throw ConfigError("config field 'env': unknown environment '" + name + "'");
    }
    GridWorld world = build_gridworld(spec);
    env.mdp = std::move(world.mdp);
    env.start = StartFixed{world.start_state};
    env.start_state = world.start_state;
    env.fixed_start = true;
    return env;
}

BuiltEnv build_env(const RunConfig& config) {
    BuiltEnv env = build_env_by_name(config.env, config.c_goal, config.c_allowed,
                                     config.c_blocked, config.map_path);
    if (config.start == "fixed") env.start = StartFixed{env.start_state};
    else if (config.start == "uniform") env.start = StartUniform{};
    else if (config.start == "stationary") env.start = StartStationary{};
    return env;
}

std::filesystem::path output_root() {
    if (const char* root = std::getenv("OIR_OUTPUT_ROOT")) return std::filesystem::path(root);
    return std::filesystem::current_path();
}

namespace {

std::string format_g9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

DensityMode density_from_string(const std::string& mode) {
    if (mode == "exact") return DensityMode::Exact;
    if (mode == "cumulative") return DensityMode::CumulativeEmpirical;
    return DensityMode::Empirical;
}

RunLog run_single_seed(const RunConfig& cfg, const BuiltEnv& env, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    RunLog log;
    log.seed = seed;
    Rng rng(seed);

    if (cfg.algorithm == "exact_pgd") {
        // Random initialization per seed; the records carry exact values.
        Vec theta0(env.mdp.n_states * env.mdp.n_actions);
        for (int i = 0; i < theta0.size(); ++i) theta0[i] = rng.uniform(-2.0, 2.0);
        const double eta = cfg.eta > 0 ? cfg.eta : cfg.alpha;
        const PgdResult run = exact_projected_gd(env.mdp, cfg.kappa, theta0, eta, cfg.episodes,
                                                 cfg.projection_bound);
        for (int t = 0; t < cfg.episodes; ++t) {
            const SoftmaxPolicy p{run.thetas[static_cast<std::size_t>(t)]};
            const OccupancyStats stats = occupancy_stats(env.mdp, p, cfg.kappa);
            log.records.push_back(RunRecord{t, stats.avg_cost, stats.entropy_d, stats.oir,
                                            stats.avg_cost, stats.entropy_d});
        }
    } else {
        const CriticFeatures features = CriticFeatures::identity(env.mdp.n_states);
        LearnerState st = LearnerState::make(env.mdp, features, cfg.kappa, cfg.alpha, cfg.beta,
                                             cfg.tau, cfg.ema_init_cost, cfg.ema_init_entropy);
        st.projection_bound = cfg.projection_bound;
        st.project = cfg.project;
        const DensityMode density = density_from_string(cfg.density_mode);

        for (int ep = 0; ep < cfg.episodes; ++ep) {
            RunRecord rec;
            if (cfg.algorithm == "id_reinforce") {
                rec = id_reinforce_episode(st, env.mdp, cfg.K, env.start, density, rng);
            } else if (cfg.algorithm == "idac") {
                rec = idac_episode(st, env.mdp, cfg.K, env.start, features, density, rng);
            } else if (cfg.algorithm == "vanilla_ac") {
                rec = vanilla_ac_episode(st, env.mdp, cfg.K, env.start, features, rng);
            } else if (cfg.algorithm == "max_state_entropy_reinforce") {
                rec = max_entropy_episode(st, env.mdp, cfg.K, env.start, EntropyVariant::State,
                                          EntropyScheme::Reinforce, features, density, rng);
            } else if (cfg.algorithm == "max_state_entropy_ac") {
                rec = max_entropy_episode(st, env.mdp, cfg.K, env.start, EntropyVariant::State,
                                          EntropyScheme::ActorCritic, features, density, rng);
            } else if (cfg.algorithm == "max_state_action_entropy_reinforce") {
                rec = max_entropy_episode(st, env.mdp, cfg.K, env.start,
                                          EntropyVariant::StateAction, EntropyScheme::Reinforce,
                                          features, density, rng);
            } else {  // max_state_action_entropy_ac
                rec = max_entropy_episode(st, env.mdp, cfg.K, env.start,
                                          EntropyVariant::StateAction, EntropyScheme::ActorCritic,
                                          features, density, rng);
            }
            rec.episode = ep;
            log.records.push_back(rec);
        }
    }
    log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return log;
}

}  // namespace

double student_t_quantile(double p, int dof) {
    if (dof < 1) throw std::invalid_argument("student_t_quantile: dof must be >= 1");
    // Regularized incomplete beta via Lentz's continued fraction, then the
    // CDF is inverted by bisection. Accurate to ~1e-12, plenty for CI bands.
    auto betacf = [](double a, double b, double x) {
        const int max_it = 300;
        const double eps = 3e-16;
        const double fpmin = 1e-300;
        const double qab = a + b;
        const double qap = a + 1.0;
        const double qam = a - 1.0;
        double c = 1.0;
        double d = 1.0 - qab * x / qap;
        if (std::abs(d) < fpmin) d = fpmin;
        d = 1.0 / d;
        double h = d;
        for (int m = 1; m <= max_it; ++m) {
            const int m2 = 2 * m;
            double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
            d = 1.0 + aa * d;
            if (std::abs(d) < fpmin) d = fpmin;
            c = 1.0 + aa / c;
            if (std::abs(c) < fpmin) c = fpmin;
            d = 1.0 / d;
            h *= d * c;
            aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
            d = 1.0 + aa * d;
            if (std::abs(d) < fpmin) d = fpmin;
            c = 1.0 + aa / c;
            if (std::abs(c) < fpmin) c = fpmin;
            d = 1.0 / d;
            const double del = d * c;
            h *= del;
            if (std::abs(del - 1.0) < eps) break;
        }
        return h;
    };
    auto betai = [&](double a, double b, double x) {
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return 1.0;
        const double ln_beta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
        const double front = std::exp(ln_beta + a * std::log(x) + b * std::log(1.0 - x));
        if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
        return 1.0 - front * betacf(b, a, 1.0 - x) / b;
    };
    auto cdf = [&](double t) {
        const double x = dof / (dof + t * t);
        const double tail = 0.5 * betai(0.5 * dof, 0.5, x);
        return t >= 0.0 ? 1.0 - tail : tail;
    };
    double lo = 0.0;
    double hi = 1000.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < p) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::string run_log_csv(const RunLog& log) {
    std::string out = "episode,emp_cost,emp_entropy,emp_oir,ema_cost,ema_entropy\n";
    for (const RunRecord& r : log.records) {
        out += std::to_string(r.episode);
        out += ',';
        out += format_g9(r.emp_cost);
        out += ',';
        out += format_g9(r.emp_entropy);
        out += ',';
        out += format_g9(r.emp_oir);
        out += ',';
        out += format_g9(r.ema_cost);
        out += ',';
        out += format_g9(r.ema_entropy);
        out += '\n';
    }
    return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::string out =
        "episode,mean_cost,ci95_cost,mean_entropy,ci95_entropy,mean_oir,ci95_oir\n";
    for (const SummaryRow& r : rows) {
        out += std::to_string(r.episode);
        out += ',';
        out += format_g9(r.mean_cost);
        out += ',';
        out += format_g9(r.ci_cost);
        out += ',';
        out += format_g9(r.mean_entropy);
        out += ',';
        out += format_g9(r.ci_entropy);
        out += ',';
        out += format_g9(r.mean_oir);
        out += ',';
        out += format_g9(r.ci_oir);
        out += '\n';
    }
    return out;
}

ExperimentResult run_experiment(const RunConfig& config) {
    config.validate();
    const BuiltEnv env = build_env(config);

    ExperimentResult result;
    result.logs.resize(config.seeds.size());
    std::vector<std::future<RunLog>> futures;
    futures.reserve(config.seeds.size());
    for (std::uint64_t seed : config.seeds)
        futures.push_back(std::async(std::launch::async,
                                     [&, seed]() { return run_single_seed(config, env, seed); }));
    for (std::size_t i = 0; i < futures.size(); ++i) result.logs[i] = futures[i].get();

    const std::string prefix = config.name.empty() ? config.algorithm : config.name;
    const std::filesystem::path dir = output_root() / config.out;
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < result.logs.size(); ++i) {
        const std::filesystem::path path =
            dir / (prefix + "_seed" + std::to_string(config.seeds[i]) + ".csv");
        std::ofstream out(path, std::ios::binary);
        out << run_log_csv(result.logs[i]);
        result.csv_paths.push_back(path);
    }

    const int n_seeds = static_cast<int>(config.seeds.size());
    const double t_crit = n_seeds >= 2 ? student_t_quantile(0.975, n_seeds - 1) : 0.0;
    for (int ep = 0; ep < config.episodes; ++ep) {
        SummaryRow row;
        row.episode = ep;
        auto accumulate = [&](auto field, double& mean_out, double& ci_out) {
            double total = 0.0;
            for (const RunLog& log : result.logs)
                total += log.records[static_cast<std::size_t>(ep)].*field;
            const double mean = total / n_seeds;
            double ss = 0.0;
            for (const RunLog& log : result.logs) {
                const double dev = log.records[static_cast<std::size_t>(ep)].*field - mean;
                ss += dev * dev;
            }
            mean_out = mean;
            ci_out = n_seeds >= 2 ? t_crit * std::sqrt(ss / (n_seeds - 1) / n_seeds) : 0.0;
        };
        accumulate(&RunRecord::emp_cost, row.mean_cost, row.ci_cost);
        accumulate(&RunRecord::emp_entropy, row.mean_entropy, row.ci_entropy);
        accumulate(&RunRecord::emp_oir, row.mean_oir, row.ci_oir);
        result.summary.push_back(row);
    }
    result.summary_path = dir / (prefix + "_summary.csv");
    std::ofstream out(result.summary_path, std::ios::binary);
    out << summary_csv(result.summary);
    return result;
}

SolverReport run_solver(const BuiltEnv& env, const std::vector<double>& kappas) {
    SolverReport report;
    report.env_name = env.name;
    report.stationarity_warning = env.fixed_start;
    report.lp_optimum = solve_lp(env.mdp).objective;

    std::vector<double> sorted = kappas;
    std::sort(sorted.begin(), sorted.end());

    std::ostringstream out;
    out << "environment: " << env.name << "\n";
    if (report.stationarity_warning)
        out << "warning: fixed-start episodes break stationarity; solver optima assume the\n"
               "         start-state-independent long-run occupancy and may not match\n"
               "         episodic learning curves on this environment\n";
    out << "LP average-cost optimum J* = " << format_g9(report.lp_optimum) << "\n";
    out << "kappa,rho_star,J_lambda_star,H_lambda_star,fw_gap,converged\n";
    for (double kappa : sorted) {
        const OccupancySolution sol = solve_oir(env.mdp, kappa);
        report.rows.push_back(SweepRow{kappa, sol.objective, sol.avg_cost, sol.entropy_marginal,
                                       sol.converged});
        report.solutions.push_back(sol);
        out << format_g9(kappa) << ',' << format_g9(sol.objective) << ','
            << format_g9(sol.avg_cost) << ',' << format_g9(sol.entropy_marginal) << ','
            << format_g9(sol.duality_gap) << ',' << (sol.converged ? "yes" : "no") << "\n";
    }
    if (!report.solutions.empty()) {
        const OccupancySolution& last = report.solutions.back();
        out << "d* (kappa=" << format_g9(sorted.back()) << "):";
        const Vec marginals = last.lambda.rowwise().sum();
        for (int s = 0; s < marginals.size(); ++s) out << ' ' << format_g9(marginals[s]);
        out << "\npi* rows:\n";
        for (int s = 0; s < last.policy.rows(); ++s) {
            for (int a = 0; a < last.policy.cols(); ++a)
                out << (a ? "," : "") << format_g9(last.policy(s, a));
            out << "\n";
        }
    }
    report.text = out.str();
    return report;
}

CheckRun run_checks(const std::string& suite, std::uint64_t seed) {
    CheckRun run;
    if (suite == "gradients") run.reports = run_gradient_suite(seed);
    else if (suite == "optimality") run.reports = run_optimality_suite(seed);
    else if (suite == "rate") run.reports = run_rate_suite(seed);
    else if (suite == "quasiconvexity") run.reports = run_quasiconvexity_suite(seed);
    else throw ConfigError("unknown check suite '" + suite +
                           "' (expected gradients|optimality|rate|quasiconvexity)");

    std::ostringstream out;
    int passed = 0;
    for (const CheckReport& r : run.reports) {
        if (r.pass) ++passed;
        else run.passed = false;
        out << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  " << r.instance
            << "  metric=" << format_g9(r.metric) << "  threshold=" << format_g9(r.threshold)
            << "\n";
    }
    out << suite << ": " << passed << "/" << run.reports.size() << " checks passed\n";
    run.text = out.str();
    return run;
}

}  // namespace oir
