// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "oir/envs.hpp"
#include "oir/harness.hpp"
#include "oir/learn.hpp"
#include "oir/solve.hpp"

namespace {

const oir::TabularMDP& simple_env() {
    static const oir::TabularMDP mdp = oir::build_simple_env();
    return mdp;
}

const oir::TabularMDP& gridworld1() {
    static const oir::BuiltEnv env = oir::build_env_by_name("gridworld1");
    return env.mdp;
}

void BM_StationaryDistribution(benchmark::State& state) {
    const auto& mdp = gridworld1();
    const auto policy = oir::SoftmaxPolicy::zeros(mdp.n_states, mdp.n_actions);
    for (auto _ : state) {
        benchmark::DoNotOptimize(oir::stationary_distribution(mdp, policy));
    }
}
BENCHMARK(BM_StationaryDistribution);

void BM_ExactOirGradient(benchmark::State& state) {
    const auto& mdp = simple_env();
    oir::SoftmaxPolicy policy = oir::SoftmaxPolicy::zeros(mdp.n_states, mdp.n_actions);
    policy.theta[3] = 0.7;
    for (auto _ : state) {
        benchmark::DoNotOptimize(oir::exact_oir_gradient(mdp, policy, 1.0));
    }
}
BENCHMARK(BM_ExactOirGradient);

void BM_IdacEpisode(benchmark::State& state) {
    const auto& mdp = gridworld1();
    const auto features = oir::CriticFeatures::identity(mdp.n_states);
    auto learner = oir::LearnerState::make(mdp, features, 1.0, 1.8, 2.0, 0.1);
    oir::Rng rng(7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(oir::idac_episode(learner, mdp, 200, oir::StartFixed{0},
                                                   features, oir::DensityMode::Empirical, rng));
    }
}
BENCHMARK(BM_IdacEpisode);

void BM_SolveOirSimpleEnv(benchmark::State& state) {
    const auto& mdp = simple_env();
    for (auto _ : state) {
        benchmark::DoNotOptimize(oir::solve_oir(mdp, 1.0));
    }
}
BENCHMARK(BM_SolveOirSimpleEnv);

void BM_SolveLpSimpleEnv(benchmark::State& state) {
    const auto& mdp = simple_env();
    for (auto _ : state) {
        benchmark::DoNotOptimize(oir::solve_lp(mdp));
    }
}
BENCHMARK(BM_SolveLpSimpleEnv);

}  // namespace

BENCHMARK_MAIN();
