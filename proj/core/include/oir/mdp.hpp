// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <span>

namespace oir {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Finite average-cost MDP. `transition` has one row per (state, action)
/// pair (row index s * n_actions + a) holding the distribution over next
/// states; `cost` is the strictly positive per-step cost table.
struct TabularMDP {
    int n_states = 0;
    int n_actions = 0;
    Mat transition;  // (n_states * n_actions) x n_states
    Mat cost;        // n_states x n_actions

    int sa(int s, int a) const { return s * n_actions + a; }

    /// Validates the row-stochastic and positive-cost invariants; throws
    /// std::invalid_argument on violation.
    void validate() const;
};

/// Tabular softmax policy. One logit per (state, action); features are the
/// implicit one-hot basis, so theta is addressed exactly like the cost table.
struct SoftmaxPolicy {
    Vec theta;  // n_states * n_actions logits

    static SoftmaxPolicy zeros(int n_states, int n_actions) {
        return SoftmaxPolicy{Vec::Zero(n_states * n_actions)};
    }

    /// Row-stochastic action probability matrix (n_states x n_actions),
    /// computed with max-subtraction so extreme logits stay finite.
    Mat probs(int n_states, int n_actions) const;
};

/// Exact long-run statistics of a (MDP, policy, kappa) triple. Entropies are
/// in nats; `oir` is avg_cost / (kappa + entropy_d).
struct OccupancyStats {
    Vec d;           // state occupancy, length n_states
    Mat lambda;      // state-action occupancy, n_states x n_actions
    double avg_cost = 0.0;
    double entropy_d = 0.0;
    double entropy_lambda = 0.0;
    double kappa = 0.0;
    double oir = 0.0;
};

/// Solution of the average-reward Poisson equation for some per-step signal,
/// normalized so that the occupancy-weighted state value is zero.
struct RelativeValues {
    Vec state_values;   // V, length n_states
    Mat action_values;  // Q, n_states x n_actions
    double gain = 0.0;  // long-run average of the evaluated signal
};

/// Auxiliary MDP sharing the base dynamics whose reward is the negative log
/// of a frozen occupancy measure. Policy gradients on its average reward are
/// occupancy-entropy gradients of the base problem.
struct ShadowMDP {
    const TabularMDP* base = nullptr;
    Mat shadow_reward;  // n_states x n_actions signal table
};

/// Markov matrix P_pi(s' | s) of the chain induced on states.
Mat policy_transition_matrix(const TabularMDP& mdp, const Mat& probs);

/// Unique stationary distribution of P_pi (direct dense solve with the
/// normalization row; power-iteration fallback on ill-conditioning).
/// Throws NonUniqueStationary when the balance system is rank-deficient
/// beyond its one-dimensional null space.
Vec stationary_distribution(const TabularMDP& mdp, const SoftmaxPolicy& policy);
Vec stationary_of_matrix(const Mat& P);

/// Exact occupancy statistics. Throws DegenerateDenominator when
/// kappa + H(d) <= 1e-12.
OccupancyStats occupancy_stats(const TabularMDP& mdp, const SoftmaxPolicy& policy, double kappa);

/// Entropy with the 0 log 0 = 0 convention, in nats.
double entropy(const Vec& dist);

/// Flattening of an n_states x n_actions table matching TabularMDP::sa
/// indexing (s * n_actions + a), regardless of Eigen storage order.
Vec flatten_sa(const Mat& table);
Mat unflatten_sa(const Vec& flat, int n_states, int n_actions);

/// Shadow-MDP constructors: state reward -log d_ref(s), or state-action
/// reward -log d_ref(s) - log pi_ref(a|s).
ShadowMDP state_shadow(const TabularMDP& mdp, const Vec& d_ref);
ShadowMDP state_action_shadow(const TabularMDP& mdp, const Vec& d_ref, const Mat& probs_ref);

/// Average-reward Poisson solve for an arbitrary per-(s,a) signal.
RelativeValues relative_values(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                               const Mat& signal);

/// Exact policy gradient of the long-run average of `signal` in theta space,
/// assembled from relative action values (advantage form).
Vec exact_signal_gradient(const TabularMDP& mdp, const SoftmaxPolicy& policy, const Mat& signal);

/// Exact gradient of the average cost J(theta) (classic policy gradient
/// theorem route).
Vec exact_avg_cost_gradient(const TabularMDP& mdp, const SoftmaxPolicy& policy);

/// Exact gradient of H(d_theta) via the shadow MDP with frozen reward
/// -log d(s). Throws ZeroOccupancy if any d(s) <= 1e-300.
Vec exact_entropy_gradient(const TabularMDP& mdp, const SoftmaxPolicy& policy);

/// Exact gradient of H(lambda_theta) via the state-action shadow reward.
Vec exact_state_action_entropy_gradient(const TabularMDP& mdp, const SoftmaxPolicy& policy);

/// Exact gradient of the occupancy information ratio, assembled by the
/// quotient rule from the exact cost and entropy gradients.
Vec exact_oir_gradient(const TabularMDP& mdp, const SoftmaxPolicy& policy, double kappa);

/// Visit counts normalized by sequence length. Throws EmptyTrajectory.
Vec empirical_density(std::span<const int> states, int n_states);

}  // namespace oir
