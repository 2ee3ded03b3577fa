// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "oir/errors.hpp"
#include "oir/harness.hpp"

using namespace oir;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

RunConfig tiny_config(const std::string& out_dir) {
    RunConfig cfg;
    cfg.env = "simple";
    cfg.algorithm = "idac";
    cfg.kappa = 1.0;
    cfg.K = 50;
    cfg.episodes = 20;
    cfg.seeds = {0, 1, 2};
    cfg.out = out_dir;
    return cfg;
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("config parsing: fields, comments, overrides, seed ranges") {
    const std::string text =
        "# experiment\n"
        "env = simple\n"
        "algorithm = idac\n"
        "kappa = 0.5\n"
        "alpha = 0.7\n"
        "seeds = 0..3, 7\n"
        "episodes = 12\n";
    RunConfig cfg = parse_config_text(text);
    CHECK(cfg.kappa == 0.5);
    CHECK(cfg.alpha == 0.7);
    CHECK(cfg.episodes == 12);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{0, 1, 2, 3, 7});
    apply_override(cfg, "tau=0.2");
    CHECK(cfg.tau == 0.2);
    cfg.validate();
}

TEST_CASE("config validation: field-level errors") {
    RunConfig cfg;
    cfg.algorithm = "unknown_algo";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.tau = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.seeds = {1, 1};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.episodes = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(parse_config_text("nonsense line\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("bogus_key = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("seeds = zero,one\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("alpha = fast\n"), ConfigError);
}

TEST_CASE("run_experiment: CSV schema and determinism across reruns") {
    const auto dir = fresh_dir("oir_harness_test_a");
    setenv("OIR_OUTPUT_ROOT", dir.string().c_str(), 1);
    RunConfig cfg = tiny_config("runs_a");

    const ExperimentResult first = run_experiment(cfg);
    REQUIRE(first.csv_paths.size() == 3);
    const std::string csv = slurp(first.csv_paths[0]);
    CHECK(csv.rfind("episode,emp_cost,emp_entropy,emp_oir,ema_cost,ema_entropy\n", 0) == 0);

    std::vector<std::string> bytes_first;
    for (const auto& p : first.csv_paths) bytes_first.push_back(slurp(p));
    const std::string summary_first = slurp(first.summary_path);

    const ExperimentResult second = run_experiment(cfg);
    for (std::size_t i = 0; i < second.csv_paths.size(); ++i)
        CHECK(slurp(second.csv_paths[i]) == bytes_first[i]);
    CHECK(slurp(second.summary_path) == summary_first);
    unsetenv("OIR_OUTPUT_ROOT");
}

TEST_CASE("run_experiment: record counts and emp_oir construction") {
    const auto dir = fresh_dir("oir_harness_test_b");
    setenv("OIR_OUTPUT_ROOT", dir.string().c_str(), 1);
    RunConfig cfg = tiny_config("runs_b");
    const ExperimentResult result = run_experiment(cfg);
    for (const RunLog& log : result.logs) {
        CHECK(log.records.size() == 20);
        for (const RunRecord& r : log.records) {
            CHECK(r.emp_oir ==
                  doctest::Approx(r.emp_cost / (cfg.kappa + r.emp_entropy)).epsilon(1e-12));
        }
    }
    unsetenv("OIR_OUTPUT_ROOT");
}

TEST_CASE("summary: confidence intervals shrink from 5 to 15 seeds") {
    const auto dir = fresh_dir("oir_harness_test_c");
    setenv("OIR_OUTPUT_ROOT", dir.string().c_str(), 1);
    RunConfig cfg = tiny_config("runs_c");
    cfg.episodes = 40;
    cfg.seeds = {0, 1, 2, 3, 4};
    const ExperimentResult five = run_experiment(cfg);
    cfg.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
    cfg.name = "idac15";
    const ExperimentResult fifteen = run_experiment(cfg);

    double mean_ci_5 = 0.0;
    double mean_ci_15 = 0.0;
    for (int ep = 0; ep < 40; ++ep) {
        mean_ci_5 += five.summary[static_cast<std::size_t>(ep)].ci_cost;
        mean_ci_15 += fifteen.summary[static_cast<std::size_t>(ep)].ci_cost;
    }
    CHECK(mean_ci_15 < mean_ci_5);
    unsetenv("OIR_OUTPUT_ROOT");
}

TEST_CASE("student_t_quantile: textbook values") {
    CHECK(student_t_quantile(0.975, 4) == doctest::Approx(2.776445).epsilon(1e-5));
    CHECK(student_t_quantile(0.975, 14) == doctest::Approx(2.144787).epsilon(1e-5));
    CHECK(student_t_quantile(0.975, 1) == doctest::Approx(12.7062).epsilon(1e-4));
}

TEST_CASE("run_solver: SimpleEnv report has the LP optimum and no warning") {
    const BuiltEnv env = build_env_by_name("simple");
    const SolverReport report = run_solver(env, {1.0});
    CHECK(report.lp_optimum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(!report.stationarity_warning);
    CHECK(report.rows.size() == 1);
    CHECK(report.rows[0].rho == doctest::Approx(0.627).epsilon(2e-3));
    CHECK(report.text.find("J* = 1") != std::string::npos);
}

TEST_CASE("run_solver: fixed-start gridworld carries a stationarity warning") {
    const BuiltEnv env = build_env_by_name("gridworld1");
    const SolverReport report = run_solver(env, {1.0});
    CHECK(report.stationarity_warning);
    CHECK(report.text.find("warning") != std::string::npos);
}

TEST_CASE("run_checks: unknown suite raises ConfigError") {
    CHECK_THROWS_AS(run_checks("bogus", 1), ConfigError);
}

TEST_CASE("run_experiment: vanilla AC reaches the SimpleEnv optimum (stock settings)") {
    const auto dir = fresh_dir("oir_harness_test_vanilla");
    setenv("OIR_OUTPUT_ROOT", dir.string().c_str(), 1);
    RunConfig cfg = parse_config_text(
        "env = simple\n"
        "algorithm = vanilla_ac\n"
        "alpha = 0.5\n"
        "beta = 1.0\n"
        "tau = 0.1\n"
        "K = 200\n"
        "episodes = 1000\n"
        "seeds = 0..14\n"
        "out = vanilla\n");
    cfg.validate();
    const ExperimentResult result = run_experiment(cfg);
    const double final_mean = result.summary.back().mean_cost;
    CHECK(std::abs(final_mean - 1.0) < 0.05);
    unsetenv("OIR_OUTPUT_ROOT");
}

TEST_CASE("run_experiment: GridWorld1 IDAC ends cheaper than vanilla AC") {
    const auto dir = fresh_dir("oir_harness_test_gw");
    setenv("OIR_OUTPUT_ROOT", dir.string().c_str(), 1);
    RunConfig idac = parse_config_text(
        "env = gridworld1\n"
        "algorithm = idac\n"
        "kappa = 1.0\n"
        "alpha = 1.8\n"
        "beta = 2.0\n"
        "tau = 0.1\n"
        "K = 200\n"
        "episodes = 2000\n"
        "seeds = 0..4\n"
        "density_mode = cumulative\n"
        "out = gw\n");
    RunConfig vanilla = idac;
    vanilla.algorithm = "vanilla_ac";
    vanilla.name = "vanilla";
    const ExperimentResult idac_result = run_experiment(idac);
    const ExperimentResult vanilla_result = run_experiment(vanilla);
    CHECK(idac_result.summary.back().mean_cost < vanilla_result.summary.back().mean_cost);
    unsetenv("OIR_OUTPUT_ROOT");
}

TEST_CASE("exact_pgd through the harness emits exact curves") {
    const auto dir = fresh_dir("oir_harness_test_d");
    setenv("OIR_OUTPUT_ROOT", dir.string().c_str(), 1);
    RunConfig cfg;
    cfg.env = "simple";
    cfg.algorithm = "exact_pgd";
    cfg.kappa = 1.0;
    cfg.alpha = 1.0;
    cfg.episodes = 50;
    cfg.seeds = {0};
    cfg.out = "runs_d";
    const ExperimentResult result = run_experiment(cfg);
    const auto& recs = result.logs[0].records;
    REQUIRE(recs.size() == 50);
    CHECK(recs.back().emp_oir <= recs.front().emp_oir + 1e-12);
    unsetenv("OIR_OUTPUT_ROOT");
}
