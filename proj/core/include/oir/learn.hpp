// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "oir/envs.hpp"
#include "oir/mdp.hpp"
#include "oir/rng.hpp"

namespace oir {

/// How the learners obtain the occupancy density behind -log d(s) terms.
/// `Exact` queries the model (stationary distribution of the current
/// policy), `Empirical` uses the current episode's visitation counts, and
/// `CumulativeEmpirical` accumulates counts across episodes.
enum class DensityMode { Exact, Empirical, CumulativeEmpirical };

/// Linear critic feature table, one row per state.
struct CriticFeatures {
    Mat phi;  // n_states x k

    static CriticFeatures identity(int n_states) {
        return CriticFeatures{Mat::Identity(n_states, n_states)};
    }

    int dim() const { return static_cast<int>(phi.cols()); }

    /// Throws std::invalid_argument unless phi has full column rank.
    void validate() const;

    /// True when some combination of columns reproduces the all-ones vector
    /// (the case the TD convergence analysis excludes; tabular identity
    /// features have this property).
    bool spans_constant(double tol = 1e-9) const;
};

/// Mutable state owned by one learning run.
struct LearnerState {
    SoftmaxPolicy policy;
    Vec critic_cost;            // omega^J
    Vec critic_entropy;         // omega^H
    double ema_cost = 1.0;      // mu~^J, must start > 0
    double ema_entropy = 1.0;   // mu~^H, must start > 0
    double step_actor = 0.5;    // alpha (eta for the REINFORCE-style updates)
    double step_critic = 1.0;   // beta
    double step_ema = 0.1;      // tau in (0, 1]
    double kappa = 1.0;
    double projection_bound = 50.0;  // box half-width B for Gamma
    bool project = false;
    Vec visit_counts;  // used only by DensityMode::CumulativeEmpirical

    static LearnerState make(const TabularMDP& mdp, const CriticFeatures& features,
                             double kappa = 1.0, double step_actor = 0.5,
                             double step_critic = 1.0, double step_ema = 0.1,
                             double ema_init_cost = 1.0, double ema_init_entropy = 1.0);

    void validate(int n_states, int n_actions, int k_feat) const;
};

/// One per-episode record; the CSV schema mirrors these fields.
struct RunRecord {
    int episode = 0;
    double emp_cost = 0.0;
    double emp_entropy = 0.0;
    double emp_oir = 0.0;
    double ema_cost = 0.0;
    double ema_entropy = 0.0;
};

struct RunLog {
    std::vector<RunRecord> records;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
};

/// mu <- (1 - tau) mu + tau x. All learners route their moving averages
/// through this one expression.
inline double ema_update(double prev, double x, double tau) {
    return (1.0 - tau) * prev + tau * x;
}

/// (1/K) sum_i w_i grad log pi(a_i | s_i) in theta space.
Vec score_weighted_sum(const Mat& probs, const Trajectory& traj, std::span<const double> weights);

/// Euclidean projection onto the box [-bound, bound]^dim.
Vec project_box(Vec theta, double bound);

/// One ID-REINFORCE step: a K-step rollout, EMA updates, and a policy
/// gradient step along the trajectory estimate of the OIR gradient.
RunRecord id_reinforce_episode(LearnerState& state, const TabularMDP& mdp, int K, StartMode start,
                               DensityMode density, Rng& rng);

/// One IDAC step: cost and entropy TD errors over the rollout (terminal
/// value zero past the last step), averaged critic updates, then the actor
/// step on the two-critic OIR gradient estimate, optionally projected.
RunRecord idac_episode(LearnerState& state, const TabularMDP& mdp, int K, StartMode start,
                       const CriticFeatures& features, DensityMode density, Rng& rng);

/// Single-critic average-cost actor-critic baseline.
RunRecord vanilla_ac_episode(LearnerState& state, const TabularMDP& mdp, int K, StartMode start,
                             const CriticFeatures& features, Rng& rng);

enum class EntropyVariant { State, StateAction };
enum class EntropyScheme { Reinforce, ActorCritic };

/// Gradient ascent on H(d) or H(lambda) with an EMA baseline (REINFORCE
/// scheme) or an entropy-critic TD error (actor-critic scheme).
RunRecord max_entropy_episode(LearnerState& state, const TabularMDP& mdp, int K, StartMode start,
                              EntropyVariant variant, EntropyScheme scheme,
                              const CriticFeatures& features, DensityMode density, Rng& rng);

struct PgdResult {
    std::vector<Vec> thetas;
    std::vector<double> rhos;
    std::vector<double> gaps;  // rho(theta_t) - rho*
    Vec final_theta;
    double rho_star = 0.0;
};

/// Deterministic projected gradient descent on the exact OIR:
/// theta <- Proj_box(theta - eta * exact_oir_gradient). rho* is solved for
/// unless supplied.
PgdResult exact_projected_gd(const TabularMDP& mdp, double kappa, const Vec& theta0, double eta,
                             int steps, double box_bound,
                             std::optional<double> rho_star = std::nullopt);

/// Test hooks: stationary expectation of the learners' update direction
/// with every sampled quantity replaced by its exact counterpart (relative
/// advantages for TD errors, exact J and H for the moving averages).
Vec expected_oir_update_direction(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                                  double kappa);
Vec expected_entropy_update_direction(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                                      EntropyVariant variant);

}  // namespace oir
