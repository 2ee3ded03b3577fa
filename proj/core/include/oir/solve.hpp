// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "oir/mdp.hpp"

namespace oir {

/// Equality system over state-action occupancies: total mass one plus the
/// flow-balance row of every state. One flow row is redundant (they sum to
/// zero) and is dropped when assembling LPs.
struct OccupancyPolytope {
    int n_states = 0;
    int n_actions = 0;
    Mat A;  // (1 + n_states) x (n_states * n_actions)
    Vec b;

    static OccupancyPolytope from_mdp(const TabularMDP& mdp);

    /// max |A lambda - b| over all rows (including the redundant one).
    double residual(const Vec& lambda) const;

    /// Copy with the last flow row dropped, for simplex consumption.
    void reduced(Mat& A_out, Vec& b_out) const;
};

/// Point of the perspective-transformed program: y >= 0 with sum y = t.
struct PerspectivePoint {
    Vec y;
    double t = 0.0;
};

/// zeta(lambda) = (lambda / c^T lambda, 1 / c^T lambda) and its inverse
/// lambda = y / t.
PerspectivePoint perspective_of(const Vec& lambda, const Mat& cost);
Vec perspective_back(const PerspectivePoint& z);

struct OccupancySolution {
    Mat lambda;    // n_states x n_actions
    Mat policy;    // recovered policy, rows sum to one
    double objective = 0.0;  // rho* (solve_oir) or J* (solve_lp)
    long iterations = 0;
    double duality_gap = 0.0;  // Frank-Wolfe certificate; 0 for the LP
    bool converged = true;     // false: gap stalled above tolerance
    double avg_cost = 0.0;
    double entropy_marginal = 0.0;  // H-hat(lambda*)
    double t_scale = 0.0;           // perspective t* (solve_oir only)
};

struct SolveOirOptions {
    double gap_tolerance = 1e-8;
    long max_outer_iterations = 1000;
    long max_lp_iterations = 1000000;
    int correction_iterations = 400;  // Newton steps per hull refinement
};

/// Exact average-cost optimum over the occupancy polytope (dual LP of the
/// MDP). Throws LpInfeasible / LpUnbounded on broken constraint assembly.
OccupancySolution solve_lp(const Mat& cost, const OccupancyPolytope& polytope);
OccupancySolution solve_lp(const TabularMDP& mdp);

/// Global OIR optimum via Frank-Wolfe on the perspective-transformed concave
/// program, certified by the duality gap at the LP oracle vertex. The
/// iterate is refined over the collected vertex set each round so the
/// certificate actually reaches the tolerance.
OccupancySolution solve_oir(const TabularMDP& mdp, double kappa,
                            const SolveOirOptions& options = {});

/// Conditional normalization of a state-action occupancy into a policy; rows
/// with (numerically) zero marginal become uniform.
Mat recover_policy(const Mat& lambda);

struct SweepRow {
    double kappa = 0.0;
    double rho = 0.0;
    double avg_cost = 0.0;
    double entropy_marginal = 0.0;
    bool converged = true;
};

/// One solve_oir per kappa; the list must be sorted ascending.
std::vector<SweepRow> kappa_sweep(const TabularMDP& mdp, const std::vector<double>& kappas,
                                  const SolveOirOptions& options = {});

/// The OIR of an explicit occupancy point (used by sampling checks).
double oir_of_lambda(const Mat& lambda, const Mat& cost, double kappa);

}  // namespace oir
