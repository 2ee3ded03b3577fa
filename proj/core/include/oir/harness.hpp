// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "oir/envs.hpp"
#include "oir/learn.hpp"
#include "oir/solve.hpp"
#include "oir/verify.hpp"

namespace oir {

/// Flat experiment description; mirrors the key=value config format.
struct RunConfig {
    std::string env = "simple";
    std::string map_path;  // used when env == "map"
    std::string algorithm = "idac";
    double kappa = 1.0;
    double alpha = 0.5;  // actor step (eta for REINFORCE-style algorithms)
    double beta = 1.0;   // critic step
    double tau = 0.1;    // EMA mixing rate
    int K = 200;         // episode length
    int episodes = 1000;
    std::vector<std::uint64_t> seeds = {0};
    std::string density_mode = "empirical";
    double projection_bound = 50.0;
    bool project = false;
    double ema_init_cost = 1.0;
    double ema_init_entropy = 1.0;
    std::string start;  // "", "fixed", "uniform", "stationary"
    double c_goal = -1.0;
    double c_allowed = -1.0;
    double c_blocked = -1.0;  // negative = environment defaults
    double eta = -1.0;        // exact_pgd step; falls back to alpha
    std::string out = "runs";
    std::string name;  // output file prefix; defaults to the algorithm

    void validate() const;  // throws ConfigError with a field-level message
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);
void apply_override(RunConfig& config, const std::string& key_equals_value);

/// An environment resolved from a config or CLI name.
struct BuiltEnv {
    TabularMDP mdp;
    std::string name;
    StartMode start = StartUniform{};
    bool fixed_start = false;  // solver reports carry a stationarity warning
    int start_state = 0;
};

BuiltEnv build_env(const RunConfig& config);
BuiltEnv build_env_by_name(const std::string& name, double c_goal = -1.0, double c_allowed = -1.0,
                           double c_blocked = -1.0, const std::string& map_path = {});

struct SummaryRow {
    int episode = 0;
    double mean_cost = 0.0, ci_cost = 0.0;
    double mean_entropy = 0.0, ci_entropy = 0.0;
    double mean_oir = 0.0, ci_oir = 0.0;
};

struct ExperimentResult {
    std::vector<RunLog> logs;  // one per seed, config order
    std::vector<std::filesystem::path> csv_paths;
    std::filesystem::path summary_path;
    std::vector<SummaryRow> summary;
};

/// Runs every seed (concurrently, one generator and output file each),
/// writes one CSV per seed plus a cross-seed summary with Student-t 95%
/// half-widths, and returns the in-memory logs.
ExperimentResult run_experiment(const RunConfig& config);

/// Root directory for relative output paths; overridable through the
/// OIR_OUTPUT_ROOT environment variable.
std::filesystem::path output_root();

struct SolverReport {
    std::string env_name;
    double lp_optimum = 0.0;
    std::vector<SweepRow> rows;
    std::vector<OccupancySolution> solutions;  // aligned with rows
    bool stationarity_warning = false;
    std::string text;  // rendered report
};

SolverReport run_solver(const BuiltEnv& env, const std::vector<double>& kappas);

/// Executes one named check suite; `passed` is false if any row failed.
struct CheckRun {
    std::vector<CheckReport> reports;
    bool passed = true;
    std::string text;
};

CheckRun run_checks(const std::string& suite, std::uint64_t seed);

/// Exact upper quantile of Student's t (two-sided 95% uses p = 0.975).
double student_t_quantile(double p, int dof);

/// Fixed CSV schema: episode,emp_cost,emp_entropy,emp_oir,ema_cost,ema_entropy
/// with floats printed to 9 significant digits.
std::string run_log_csv(const RunLog& log);
std::string summary_csv(const std::vector<SummaryRow>& rows);

}  // namespace oir
