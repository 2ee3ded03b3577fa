// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment harness: seeded multi-run learning experiments, exact-optimum
// solver reports, and theory check suites.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "oir/errors.hpp"
#include "oir/harness.hpp"

namespace {

int run_experiment_cmd(const std::string& config_path, const std::vector<std::string>& overrides,
                       const std::string& out_override) {
    oir::RunConfig config = oir::parse_config_file(config_path);
    for (const std::string& kv : overrides) oir::apply_override(config, kv);
    if (!out_override.empty()) config.out = out_override;
    config.validate();

    const oir::ExperimentResult result = oir::run_experiment(config);
    for (const auto& path : result.csv_paths) std::cout << "wrote " << path.string() << "\n";
    std::cout << "wrote " << result.summary_path.string() << "\n";
    if (!result.summary.empty()) {
        const oir::SummaryRow& last = result.summary.back();
        std::printf("final mean: cost=%.9g entropy=%.9g oir=%.9g (95%% ci +/- %.9g on cost)\n",
                    last.mean_cost, last.mean_entropy, last.mean_oir, last.ci_cost);
    }
    return 0;
}

int run_solve_cmd(const std::string& env_name, std::vector<double> kappas,
                  const std::string& map_path, double c_goal, double c_allowed,
                  double c_blocked) {
    if (kappas.empty()) kappas.push_back(1.0);
    const oir::BuiltEnv env =
        oir::build_env_by_name(env_name, c_goal, c_allowed, c_blocked, map_path);
    const oir::SolverReport report = oir::run_solver(env, kappas);
    std::cout << report.text;
    return 0;
}

int run_check_cmd(const std::string& suite, std::uint64_t seed) {
    const oir::CheckRun run = oir::run_checks(suite, seed);
    std::cout << run.text;
    return run.passed ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"occupancy-information-ratio workbench"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_override;
    auto* experiment = app.add_subcommand("experiment", "run a seeded learning experiment");
    experiment->add_option("config", config_path, "key=value config file")->required();
    experiment->add_option("--set", overrides, "override config fields (key=value)");
    experiment->add_option("--out", out_override, "output directory (overrides config)");

    std::string env_name;
    std::vector<double> kappas;
    std::string map_path;
    double c_goal = -1.0;
    double c_allowed = -1.0;
    double c_blocked = -1.0;
    auto* solve = app.add_subcommand("solve", "exact LP and OIR optima for an environment");
    solve->add_option("env", env_name,
                      "simple | gridworld1..3 | large_gridworld | map (with --map)")
        ->required();
    solve->add_option("--kappa", kappas, "kappa value(s); repeated or comma-separated")
        ->delimiter(',');
    solve->add_option("--map", map_path, "ASCII map file for env=map");
    solve->add_option("--c-goal", c_goal, "goal-state cost override");
    solve->add_option("--c-allowed", c_allowed, "allowed-action cost override");
    solve->add_option("--c-blocked", c_blocked, "blocked-action cost override");

    std::string suite;
    std::uint64_t seed = 0;
    auto* check = app.add_subcommand("check", "run a theory-validation suite");
    check->add_option("suite", suite, "gradients | optimality | rate | quasiconvexity")
        ->required();
    check->add_option("--seed", seed, "instance seed");

    try {
        app.parse(argc, argv);
        if (experiment->parsed())
            return run_experiment_cmd(config_path, overrides, out_override);
        if (solve->parsed())
            return run_solve_cmd(env_name, kappas, map_path, c_goal, c_allowed, c_blocked);
        return run_check_cmd(suite, seed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const oir::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
