// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "oir/solve.hpp"

#include <cmath>
#include <limits>

#include "oir/errors.hpp"
#include "oir/simplex.hpp"

namespace oir {

OccupancyPolytope OccupancyPolytope::from_mdp(const TabularMDP& mdp) {
    OccupancyPolytope poly;
    poly.n_states = mdp.n_states;
    poly.n_actions = mdp.n_actions;
    const int nsa = mdp.n_states * mdp.n_actions;
    poly.A = Mat::Zero(1 + mdp.n_states, nsa);
    poly.b = Vec::Zero(1 + mdp.n_states);
    poly.A.row(0).setOnes();
    poly.b[0] = 1.0;
    // Flow balance: sum_a lambda_{sa} = sum_{s',a} p(s | s', a) lambda_{s'a}.
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int sp = 0; sp < mdp.n_states; ++sp)
            for (int a = 0; a < mdp.n_actions; ++a) {
                poly.A(1 + s, mdp.sa(sp, a)) -= mdp.transition(mdp.sa(sp, a), s);
                if (sp == s) poly.A(1 + s, mdp.sa(sp, a)) += 1.0;
            }
    }
    return poly;
}

double OccupancyPolytope::residual(const Vec& lambda) const {
    return (A * lambda - b).cwiseAbs().maxCoeff();
}

void OccupancyPolytope::reduced(Mat& A_out, Vec& b_out) const {
    const int rows = static_cast<int>(A.rows()) - 1;
    A_out = A.topRows(rows);
    b_out = b.head(rows);
}

PerspectivePoint perspective_of(const Vec& lambda, const Mat& cost) {
    const double j = flatten_sa(cost).dot(lambda);
    return PerspectivePoint{lambda / j, 1.0 / j};
}

Vec perspective_back(const PerspectivePoint& z) { return z.y / z.t; }

double oir_of_lambda(const Mat& lambda, const Mat& cost, double kappa) {
    const double j = (lambda.array() * cost.array()).sum();
    const Vec marginals = lambda.rowwise().sum();
    const double denom = kappa + entropy(marginals);
    if (denom <= 1e-12)
        throw DegenerateDenominator("kappa + H-hat(lambda) <= 1e-12 in oir_of_lambda");
    return j / denom;
}

Mat recover_policy(const Mat& lambda) {
    const int n = static_cast<int>(lambda.rows());
    const int m = static_cast<int>(lambda.cols());
    Mat policy(n, m);
    for (int s = 0; s < n; ++s) {
        const double marginal = lambda.row(s).sum();
        if (marginal > 1e-15)
            policy.row(s) = lambda.row(s) / marginal;
        else
            policy.row(s).setConstant(1.0 / m);
    }
    return policy;
}

OccupancySolution solve_lp(const Mat& cost, const OccupancyPolytope& polytope) {
    Mat A;
    Vec b;
    polytope.reduced(A, b);
    const Vec c = flatten_sa(cost);
    const LpResult lp = simplex_solve(A, b, c);
    if (lp.status == LpResult::Status::Infeasible)
        throw LpInfeasible("occupancy polytope infeasible: constraint assembly is broken");
    if (lp.status != LpResult::Status::Optimal)
        throw LpUnbounded("occupancy LP did not reach an optimal vertex");

    OccupancySolution sol;
    sol.lambda = unflatten_sa(lp.x, polytope.n_states, polytope.n_actions);
    sol.policy = recover_policy(sol.lambda);
    sol.objective = lp.objective;
    sol.avg_cost = lp.objective;
    sol.iterations = lp.iterations;
    sol.entropy_marginal = entropy(sol.lambda.rowwise().sum());
    return sol;
}

OccupancySolution solve_lp(const TabularMDP& mdp) {
    return solve_lp(mdp.cost, OccupancyPolytope::from_mdp(mdp));
}

namespace {

// The concave program lives over z = (y, t) with constraints
//   sum y - t = 0,  flow rows on y,  c^T y = 1,  y >= 0 (t >= 0 implied).
// Its objective kappa t - sum_s g_s log(g_s / t), g_s = sum_a y_{sa},
// depends on y only through the state marginals, so the refinement step
// works in the reduced coordinates (g, t).
struct PerspectiveProgram {
    int n_states = 0;
    int n_actions = 0;
    double kappa = 0.0;
    Mat A;  // LP rows (already reduced), over n_sa + 1 variables
    Vec b;

    static PerspectiveProgram build(const TabularMDP& mdp, double kappa) {
        PerspectiveProgram prog;
        prog.n_states = mdp.n_states;
        prog.n_actions = mdp.n_actions;
        prog.kappa = kappa;
        const int nsa = mdp.n_states * mdp.n_actions;
        const OccupancyPolytope base = OccupancyPolytope::from_mdp(mdp);
        // Rows: mass row with -t, flow rows (minus the redundant last one),
        // and the cost normalization c^T y = 1.
        const int rows = 1 + (mdp.n_states - 1) + 1;
        prog.A = Mat::Zero(rows, nsa + 1);
        prog.b = Vec::Zero(rows);
        prog.A.row(0).head(nsa).setOnes();
        prog.A(0, nsa) = -1.0;
        for (int s = 0; s + 1 < mdp.n_states; ++s)
            prog.A.row(1 + s).head(nsa) = base.A.row(1 + s);
        prog.A.row(rows - 1).head(nsa) = flatten_sa(mdp.cost).transpose();
        prog.b[rows - 1] = 1.0;
        return prog;
    }

    // Reduced coordinates of a full point: state marginals of y plus t.
    Vec reduce(const Vec& z) const {
        Vec r = Vec::Zero(n_states + 1);
        for (int s = 0; s < n_states; ++s)
            for (int a = 0; a < n_actions; ++a) r[s] += z[s * n_actions + a];
        r[n_states] = z[n_states * n_actions];
        return r;
    }

    double value_reduced(const Vec& r) const {
        const double t = r[n_states];
        double v = kappa * t;
        for (int s = 0; s < n_states; ++s) {
            const double g = r[s];
            if (g > 0.0) v -= g * std::log(g / t);
        }
        return v;
    }

    // Gradient in reduced coordinates; finite only at g > 0.
    Vec grad_reduced(const Vec& r) const {
        const double t = r[n_states];
        Vec grad(n_states + 1);
        double total = 0.0;
        for (int s = 0; s < n_states; ++s) {
            grad[s] = -std::log(r[s] / t) - 1.0;
            total += r[s];
        }
        grad[n_states] = kappa + total / t;
        return grad;
    }

    // Expand a reduced gradient to the full variable space for the LP oracle.
    Vec expand_gradient(const Vec& grad_r) const {
        Vec g = Vec::Zero(n_states * n_actions + 1);
        for (int s = 0; s < n_states; ++s)
            for (int a = 0; a < n_actions; ++a) g[s * n_actions + a] = grad_r[s];
        g[n_states * n_actions] = grad_r[n_states];
        return g;
    }
};

/// Maximize the program objective over the convex hull of the collected
/// vertices: an active-set Newton method on the weight simplex. The reduced
/// Hessian of the perspective objective is available in closed form, so the
/// inner problem is solved essentially to machine precision, which is what
/// lets the outer Frank-Wolfe certificate actually reach its tolerance.
void refine_over_hull(const PerspectiveProgram& prog, const Mat& reduced_vertices, Vec& w,
                      int max_iterations) {
    const int k = static_cast<int>(reduced_vertices.cols());
    if (k == 1) {
        w = Vec::Ones(1);
        return;
    }
    const int n = prog.n_states;
    constexpr double kBound = 1e-15;
    constexpr double kKktTol = 1e-13;

    Vec r = reduced_vertices * w;
    double value = prog.value_reduced(r);

    for (int it = 0; it < max_iterations; ++it) {
        const Vec grad = reduced_vertices.transpose() * prog.grad_reduced(r);

        std::vector<int> free_set;
        for (int i = 0; i < k; ++i)
            if (w[i] > kBound) free_set.push_back(i);
        double nu = 0.0;
        for (int i : free_set) nu += grad[i];
        nu /= static_cast<double>(free_set.size());

        // KKT: free gradients equal nu, bound gradients do not exceed it.
        double kkt = 0.0;
        int release = -1;
        double worst_bound = kKktTol * std::max(1.0, std::abs(nu));
        for (int i = 0; i < k; ++i) {
            if (w[i] > kBound) {
                kkt = std::max(kkt, std::abs(grad[i] - nu));
            } else if (grad[i] - nu > worst_bound) {
                worst_bound = grad[i] - nu;
                release = i;
            }
        }
        if (kkt <= kKktTol * std::max(1.0, std::abs(nu)) && release < 0) break;
        if (release >= 0) free_set.push_back(release);

        const int kf = static_cast<int>(free_set.size());
        if (kf < 2) break;

        // Reduced Hessian of f at r: diag(-1/g) block, 1/t couplings, -G/t^2.
        Mat hess_r = Mat::Zero(n + 1, n + 1);
        double total = 0.0;
        for (int s = 0; s < n; ++s) {
            hess_r(s, s) = -1.0 / std::max(r[s], 1e-300);
            hess_r(s, n) = hess_r(n, s) = 1.0 / r[n];
            total += r[s];
        }
        hess_r(n, n) = -total / (r[n] * r[n]);

        Mat rf(n + 1, kf);
        Vec gf(kf);
        for (int c = 0; c < kf; ++c) {
            rf.col(c) = reduced_vertices.col(free_set[static_cast<std::size_t>(c)]);
            gf[c] = grad[free_set[static_cast<std::size_t>(c)]];
        }

        // Equality-constrained Newton step: [H 1; 1^T 0][d; y] = [-g; 0].
        Mat kkt_mat = Mat::Zero(kf + 1, kf + 1);
        kkt_mat.topLeftCorner(kf, kf) =
            rf.transpose() * hess_r * rf - 1e-12 * Mat::Identity(kf, kf);
        kkt_mat.topRightCorner(kf, 1).setOnes();
        kkt_mat.bottomLeftCorner(1, kf).setOnes();
        Vec kkt_rhs = Vec::Zero(kf + 1);
        kkt_rhs.head(kf) = -gf;
        Vec step = kkt_mat.colPivHouseholderQr().solve(kkt_rhs).head(kf);

        // Fall back to the projected gradient direction when the Newton
        // system is unusable or not an ascent direction.
        const double mean_gf = gf.mean();
        if (!step.allFinite() || step.dot(gf) <= 0.0)
            step = gf - Vec::Constant(kf, mean_gf);
        if (step.cwiseAbs().maxCoeff() <= 0.0) break;

        double alpha_max = 1.0;
        for (int c = 0; c < kf; ++c)
            if (step[c] < 0.0)
                alpha_max =
                    std::min(alpha_max, -w[free_set[static_cast<std::size_t>(c)]] / step[c]);

        bool improved = false;
        double alpha = alpha_max;
        for (int bt = 0; bt < 60 && alpha > 0.0; ++bt) {
            Vec w_try = w;
            for (int c = 0; c < kf; ++c) {
                const int i = free_set[static_cast<std::size_t>(c)];
                w_try[i] = std::max(0.0, w[i] + alpha * step[c]);
            }
            w_try /= w_try.sum();
            const Vec r_try = reduced_vertices * w_try;
            const double v_try = prog.value_reduced(r_try);
            if (v_try >= value - 1e-16 * std::abs(value)) {
                improved = v_try > value;
                w = w_try;
                r = r_try;
                value = v_try;
                break;
            }
            alpha *= 0.5;
        }
        if (!improved && release < 0) break;
    }
}

}  // namespace

OccupancySolution solve_oir(const TabularMDP& mdp, double kappa, const SolveOirOptions& options) {
    const int nsa = mdp.n_states * mdp.n_actions;
    const PerspectiveProgram prog = PerspectiveProgram::build(mdp, kappa);

    // Interior start: the uniform policy's occupancy mapped through zeta.
    const SoftmaxPolicy uniform = SoftmaxPolicy::zeros(mdp.n_states, mdp.n_actions);
    const OccupancyStats stats = occupancy_stats(mdp, uniform, std::max(kappa, 1.0));
    if (kappa <= 0.0 && stats.entropy_d <= 1e-12)
        throw DegenerateDenominator(
            "kappa = 0 and the occupancy entropy vanishes: OIR undefined on this MDP");
    const Vec lambda_u = flatten_sa(stats.lambda);
    const PerspectivePoint z0p = perspective_of(lambda_u, mdp.cost);
    Vec z0(nsa + 1);
    z0.head(nsa) = z0p.y;
    z0[nsa] = z0p.t;

    std::vector<Vec> vertices{z0};
    Mat reduced(mdp.n_states + 1, 1);
    reduced.col(0) = prog.reduce(z0);
    Vec weights = Vec::Ones(1);

    OccupancySolution sol;
    Vec z = z0;
    long outer = 0;
    int stalled_rounds = 0;
    bool done = false;
    double certified_gap = std::numeric_limits<double>::infinity();

    // Gap at the LP-oracle vertex: the optimality certificate for the
    // current iterate.
    auto oracle_gap = [&](const Vec& at) {
        const Vec grad_full = prog.expand_gradient(prog.grad_reduced(prog.reduce(at)));
        const LpResult lp = simplex_solve(prog.A, prog.b, -grad_full, options.max_lp_iterations);
        if (lp.status == LpResult::Status::Infeasible)
            throw LpInfeasible("perspective polytope infeasible: constraint assembly is broken");
        if (lp.status != LpResult::Status::Optimal)
            throw LpUnbounded("Frank-Wolfe LP oracle failed");
        return std::pair<double, Vec>(grad_full.dot(lp.x - at), lp.x);
    };

    for (; outer < options.max_outer_iterations; ++outer) {
        const auto [gap, vertex] = oracle_gap(z);
        certified_gap = gap;
        if (gap <= options.gap_tolerance) {
            done = true;
            break;
        }
        const Vec& lp_x = vertex;

        bool is_new = true;
        for (const Vec& v : vertices) {
            if ((v - lp_x).cwiseAbs().maxCoeff() <= 1e-12) {
                is_new = false;
                break;
            }
        }
        if (is_new) {
            vertices.push_back(lp_x);
            reduced.conservativeResize(Eigen::NoChange, reduced.cols() + 1);
            reduced.col(reduced.cols() - 1) = prog.reduce(lp_x);
            Vec grown(weights.size() + 1);
            grown.head(weights.size()) = weights;
            grown[weights.size()] = 0.0;  // released by the KKT check
            weights = grown;
            stalled_rounds = 0;
        } else if (++stalled_rounds >= 8) {
            break;  // oracle keeps returning known vertices, gap is stuck
        }

        refine_over_hull(prog, reduced, weights, options.correction_iterations);

        z.setZero();
        for (int i = 0; i < weights.size(); ++i)
            z += weights[i] * vertices[static_cast<std::size_t>(i)];
        // Keep the state marginals strictly positive for the next gradient.
        if (prog.reduce(z).head(mdp.n_states).minCoeff() <= 0.0) z = (1.0 - 1e-12) * z + 1e-12 * z0;
    }
    // On the non-converged paths, certify the iterate actually returned.
    if (!done) certified_gap = oracle_gap(z).first;

    const double t_star = z[nsa];
    const Vec lambda_vec = z.head(nsa) / t_star;
    sol.lambda = Mat(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a) sol.lambda(s, a) = lambda_vec[mdp.sa(s, a)];
    sol.policy = recover_policy(sol.lambda);
    sol.avg_cost = (sol.lambda.array() * mdp.cost.array()).sum();
    sol.entropy_marginal = entropy(sol.lambda.rowwise().sum());
    sol.objective = sol.avg_cost / (kappa + sol.entropy_marginal);
    sol.iterations = outer;
    sol.duality_gap = std::max(certified_gap, 0.0);
    sol.converged = done;
    sol.t_scale = t_star;
    return sol;
}

std::vector<SweepRow> kappa_sweep(const TabularMDP& mdp, const std::vector<double>& kappas,
                                  const SolveOirOptions& options) {
    for (std::size_t i = 1; i < kappas.size(); ++i)
        if (kappas[i] < kappas[i - 1])
            throw std::invalid_argument("kappa_sweep: list must be sorted ascending");
    std::vector<SweepRow> rows;
    rows.reserve(kappas.size());
    for (double kappa : kappas) {
        const OccupancySolution sol = solve_oir(mdp, kappa, options);
        rows.push_back(SweepRow{kappa, sol.objective, sol.avg_cost, sol.entropy_marginal,
                                sol.converged});
    }
    return rows;
}

}  // namespace oir
