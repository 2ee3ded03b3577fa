// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "oir/mdp.hpp"
#include "oir/rng.hpp"

namespace oir {

/// One executed check. For error-type metrics pass == (metric <= threshold).
struct CheckReport {
    std::string name;
    std::string instance;
    double metric = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

enum class GradObjective { EntropyD, EntropyLambda, Oir, AvgCost };

/// Central-difference check of an arbitrary scalar function against a
/// supplied gradient; returns max_i |g_i - fd_i| / max(1, |g_i|).
double fd_check_custom(const std::function<double(const Vec&)>& f, const Vec& grad, const Vec& x,
                       double h);

/// Central differences of the named exact objective versus the exact
/// gradient routines. h must lie in [1e-8, 1e-4].
double fd_gradient_check(GradObjective objective, const TabularMDP& mdp, const Vec& theta,
                         double h, double kappa = 1.0);

struct OptimalityResult {
    std::vector<double> final_rhos;
    double spread = 0.0;         // max pairwise gap between final rho values
    double gap_to_solver = 0.0;  // max |final rho - rho*|
    double rho_star = 0.0;
};

/// Runs exact projected gradient descent from n_inits random starts and
/// reports the spread of the final OIR values and their gap to the solver
/// optimum.
OptimalityResult global_optimality_check(const TabularMDP& mdp, double kappa, int n_inits,
                                         Rng& rng, double eta = 1.0, int steps = 4000,
                                         double box_bound = 50.0, double init_scale = 2.0);

struct RateEnvelope {
    double C = 0.0;
    long violations = 0;
};

/// Fits C = max_{t<10} gap_t (t+1) and counts t >= 10 with
/// gap_t > C / (t+1). Requires at least 100 entries.
RateEnvelope rate_envelope_check(std::span<const double> gaps);

/// Samples pairs of random softmax-policy occupancies and counts mixtures
/// whose OIR exceeds the max of the endpoints beyond `tol`.
long quasiconvexity_violations(const TabularMDP& mdp, double kappa, int n_pairs, Rng& rng,
                               double tol = 1e-10);

/// Random ergodic instance generators shared by the suites and the tests:
/// Dirichlet(1) transition rows (strictly positive) and uniform costs.
TabularMDP random_mdp(Rng& rng, int n_states, int n_actions, double cost_lo = 0.5,
                      double cost_hi = 2.0);
SoftmaxPolicy random_policy(Rng& rng, int n_states, int n_actions, double scale = 1.0);

/// Named check suites behind the command-line `check` verb.
std::vector<CheckReport> run_gradient_suite(std::uint64_t seed);
std::vector<CheckReport> run_optimality_suite(std::uint64_t seed);
std::vector<CheckReport> run_rate_suite(std::uint64_t seed);
std::vector<CheckReport> run_quasiconvexity_suite(std::uint64_t seed);

}  // namespace oir
