// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "oir/verify.hpp"

#include <cmath>
#include <sstream>

#include "oir/envs.hpp"
#include "oir/learn.hpp"
#include "oir/solve.hpp"

namespace oir {

double fd_check_custom(const std::function<double(const Vec&)>& f, const Vec& grad, const Vec& x,
                       double h) {
    double worst = 0.0;
    Vec probe = x;
    for (int i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double up = f(probe);
        probe[i] = x[i] - h;
        const double down = f(probe);
        probe[i] = x[i];
        const double fd = (up - down) / (2.0 * h);
        const double err = std::abs(grad[i] - fd) / std::max(1.0, std::abs(grad[i]));
        worst = std::max(worst, err);
    }
    return worst;
}

double fd_gradient_check(GradObjective objective, const TabularMDP& mdp, const Vec& theta,
                         double h, double kappa) {
    if (h < 1e-8 || h > 1e-4)
        throw std::invalid_argument("fd_gradient_check: h must lie in [1e-8, 1e-4]");

    auto value = [&](const Vec& th) {
        const SoftmaxPolicy p{th};
        const OccupancyStats stats = occupancy_stats(mdp, p, kappa);
        switch (objective) {
            case GradObjective::EntropyD: return stats.entropy_d;
            case GradObjective::EntropyLambda: return stats.entropy_lambda;
            case GradObjective::Oir: return stats.oir;
            case GradObjective::AvgCost: return stats.avg_cost;
        }
        return 0.0;
    };

    const SoftmaxPolicy policy{theta};
    Vec grad;
    switch (objective) {
        case GradObjective::EntropyD: grad = exact_entropy_gradient(mdp, policy); break;
        case GradObjective::EntropyLambda:
            grad = exact_state_action_entropy_gradient(mdp, policy);
            break;
        case GradObjective::Oir: grad = exact_oir_gradient(mdp, policy, kappa); break;
        case GradObjective::AvgCost: grad = exact_avg_cost_gradient(mdp, policy); break;
    }
    return fd_check_custom(value, grad, theta, h);
}

OptimalityResult global_optimality_check(const TabularMDP& mdp, double kappa, int n_inits,
                                         Rng& rng, double eta, int steps, double box_bound,
                                         double init_scale) {
    OptimalityResult result;
    result.rho_star = solve_oir(mdp, kappa).objective;
    for (int i = 0; i < n_inits; ++i) {
        Vec theta0(mdp.n_states * mdp.n_actions);
        for (int j = 0; j < theta0.size(); ++j)
            theta0[j] = rng.uniform(-init_scale, init_scale);
        const PgdResult run =
            exact_projected_gd(mdp, kappa, theta0, eta, steps, box_bound, result.rho_star);
        result.final_rhos.push_back(run.rhos.back());
    }
    double lo = result.final_rhos[0];
    double hi = result.final_rhos[0];
    double gap = 0.0;
    for (double rho : result.final_rhos) {
        lo = std::min(lo, rho);
        hi = std::max(hi, rho);
        gap = std::max(gap, std::abs(rho - result.rho_star));
    }
    result.spread = hi - lo;
    result.gap_to_solver = gap;
    return result;
}

RateEnvelope rate_envelope_check(std::span<const double> gaps) {
    if (gaps.size() < 100)
        throw std::invalid_argument("rate_envelope_check: need at least 100 gap entries");
    RateEnvelope env;
    for (std::size_t t = 0; t < 10; ++t)
        env.C = std::max(env.C, gaps[t] * static_cast<double>(t + 1));
    for (std::size_t t = 10; t < gaps.size(); ++t)
        if (gaps[t] > env.C / static_cast<double>(t + 1)) ++env.violations;
    return env;
}

long quasiconvexity_violations(const TabularMDP& mdp, double kappa, int n_pairs, Rng& rng,
                               double tol) {
    long violations = 0;
    for (int k = 0; k < n_pairs; ++k) {
        const SoftmaxPolicy p1 = random_policy(rng, mdp.n_states, mdp.n_actions, 2.0);
        const SoftmaxPolicy p2 = random_policy(rng, mdp.n_states, mdp.n_actions, 2.0);
        const OccupancyStats s1 = occupancy_stats(mdp, p1, kappa);
        const OccupancyStats s2 = occupancy_stats(mdp, p2, kappa);
        const double worst = std::max(s1.oir, s2.oir);
        for (int step = 1; step <= 9; ++step) {
            const double t = 0.1 * step;
            const Mat mix = t * s1.lambda + (1.0 - t) * s2.lambda;
            if (oir_of_lambda(mix, mdp.cost, kappa) > worst + tol) ++violations;
        }
    }
    return violations;
}

TabularMDP random_mdp(Rng& rng, int n_states, int n_actions, double cost_lo, double cost_hi) {
    TabularMDP mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.transition = Mat(n_states * n_actions, n_states);
    mdp.cost = Mat(n_states, n_actions);
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            double total = 0.0;
            for (int t = 0; t < n_states; ++t) {
                // Dirichlet(1) row via normalized exponentials keeps every
                // entry strictly positive, hence the chain ergodic.
                const double e = -std::log(1.0 - rng.next_double());
                mdp.transition(mdp.sa(s, a), t) = e;
                total += e;
            }
            mdp.transition.row(mdp.sa(s, a)) /= total;
            mdp.cost(s, a) = rng.uniform(cost_lo, cost_hi);
        }
    }
    mdp.validate();
    return mdp;
}

SoftmaxPolicy random_policy(Rng& rng, int n_states, int n_actions, double scale) {
    SoftmaxPolicy policy;
    policy.theta = Vec(n_states * n_actions);
    for (int i = 0; i < policy.theta.size(); ++i) policy.theta[i] = rng.uniform(-scale, scale);
    return policy;
}

namespace {

std::string describe(int idx, const TabularMDP& mdp, double kappa) {
    std::ostringstream out;
    out << "instance " << idx << " (" << mdp.n_states << "x" << mdp.n_actions
        << ", kappa=" << kappa << ")";
    return out.str();
}

}  // namespace

std::vector<CheckReport> run_gradient_suite(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<CheckReport> reports;
    const double kappas[3] = {0.1, 1.0, 10.0};
    for (int i = 0; i < 100; ++i) {
        const int n_states = 2 + rng.uniform_int(4);   // 2..5
        const int n_actions = 2 + rng.uniform_int(4);  // 2..5
        const TabularMDP mdp = random_mdp(rng, n_states, n_actions);
        const SoftmaxPolicy policy = random_policy(rng, n_states, n_actions, 1.5);
        const double kappa = kappas[i % 3];
        double metric = fd_gradient_check(GradObjective::EntropyD, mdp, policy.theta, 1e-6);
        metric = std::max(metric,
                          fd_gradient_check(GradObjective::EntropyLambda, mdp, policy.theta, 1e-6));
        metric = std::max(
            metric, fd_gradient_check(GradObjective::Oir, mdp, policy.theta, 1e-6, kappa));
        reports.push_back(CheckReport{"gradient_fd", describe(i, mdp, kappa), metric, 1e-5,
                                      metric <= 1e-5});
        // Three kappa values per instance for the OIR objective.
        for (double extra : kappas) {
            if (extra == kappa) continue;
            const double m =
                fd_gradient_check(GradObjective::Oir, mdp, policy.theta, 1e-6, extra);
            reports.push_back(CheckReport{"gradient_fd_oir", describe(i, mdp, extra), m, 1e-5,
                                          m <= 1e-5});
        }
    }
    return reports;
}

std::vector<CheckReport> run_optimality_suite(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<CheckReport> reports;
    {
        const TabularMDP simple = build_simple_env();
        const OptimalityResult res = global_optimality_check(simple, 1.0, 10, rng);
        reports.push_back(
            CheckReport{"optimality_spread", "simple_env kappa=1", res.spread, 1e-3,
                        res.spread <= 1e-3});
        reports.push_back(CheckReport{"optimality_gap", "simple_env kappa=1", res.gap_to_solver,
                                      1e-3, res.gap_to_solver <= 1e-3});
    }
    for (int i = 0; i < 5; ++i) {
        const TabularMDP mdp = random_mdp(rng, 3, 2);
        const OptimalityResult res = global_optimality_check(mdp, 1.0, 4, rng);
        reports.push_back(CheckReport{"optimality_gap", describe(i, mdp, 1.0), res.gap_to_solver,
                                      1e-3, res.gap_to_solver <= 1e-3});
    }
    return reports;
}

std::vector<CheckReport> run_rate_suite(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<CheckReport> reports;
    const TabularMDP simple = build_simple_env();
    const SolveOirOptions options;
    const double rho_star = solve_oir(simple, 1.0, options).objective;
    Vec theta0(25);
    for (int i = 0; i < theta0.size(); ++i) theta0[i] = rng.uniform(-0.5, 0.5);
    const PgdResult run = exact_projected_gd(simple, 1.0, theta0, 20.0, 10000, 50.0, rho_star);
    const RateEnvelope env =
        rate_envelope_check(std::span<const double>(run.gaps.data(), run.gaps.size()));
    reports.push_back(CheckReport{"rate_envelope", "simple_env kappa=1 eta=20 steps=10000",
                                  static_cast<double>(env.violations), 0.0, env.violations == 0});
    return reports;
}

std::vector<CheckReport> run_quasiconvexity_suite(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<CheckReport> reports;
    const TabularMDP simple = build_simple_env();
    long violations = quasiconvexity_violations(simple, 1.0, 600, rng);
    reports.push_back(CheckReport{"quasiconvexity", "simple_env kappa=1 pairs=600",
                                  static_cast<double>(violations), 0.0, violations == 0});
    for (int i = 0; i < 2; ++i) {
        const TabularMDP mdp = random_mdp(rng, 3, 2);
        const long v = quasiconvexity_violations(mdp, 1.0, 200, rng);
        reports.push_back(CheckReport{"quasiconvexity", describe(i, mdp, 1.0),
                                      static_cast<double>(v), 0.0, v == 0});
    }
    return reports;
}

}  // namespace oir
