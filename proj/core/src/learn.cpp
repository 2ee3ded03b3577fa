// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "oir/learn.hpp"

#include <cmath>

#include "oir/errors.hpp"
#include "oir/solve.hpp"

namespace oir {

namespace {
constexpr double kDenominatorFloor = 1e-12;
constexpr double kZeroOccupancyFloor = 1e-300;
}  // namespace

void CriticFeatures::validate() const {
    Eigen::ColPivHouseholderQR<Mat> qr(phi);
    qr.setThreshold(1e-10);
    if (qr.rank() < phi.cols())
        throw std::invalid_argument("CriticFeatures: feature matrix must have full column rank");
}

bool CriticFeatures::spans_constant(double tol) const {
    const Vec ones = Vec::Ones(phi.rows());
    const Vec u = phi.colPivHouseholderQr().solve(ones);
    return (phi * u - ones).norm() <= tol;
}

LearnerState LearnerState::make(const TabularMDP& mdp, const CriticFeatures& features,
                                double kappa, double step_actor, double step_critic,
                                double step_ema, double ema_init_cost, double ema_init_entropy) {
    LearnerState st;
    st.policy = SoftmaxPolicy::zeros(mdp.n_states, mdp.n_actions);
    st.critic_cost = Vec::Zero(features.dim());
    st.critic_entropy = Vec::Zero(features.dim());
    st.ema_cost = ema_init_cost;
    st.ema_entropy = ema_init_entropy;
    st.step_actor = step_actor;
    st.step_critic = step_critic;
    st.step_ema = step_ema;
    st.kappa = kappa;
    st.visit_counts = Vec::Zero(mdp.n_states);
    st.validate(mdp.n_states, mdp.n_actions, features.dim());
    return st;
}

void LearnerState::validate(int n_states, int n_actions, int k_feat) const {
    if (policy.theta.size() != n_states * n_actions)
        throw std::invalid_argument("LearnerState: theta size mismatch");
    if (critic_cost.size() != k_feat || critic_entropy.size() != k_feat)
        throw std::invalid_argument("LearnerState: critic size mismatch");
    if (ema_cost <= 0.0 || ema_entropy <= 0.0)
        throw std::invalid_argument("LearnerState: moving averages must start positive");
    if (step_ema <= 0.0 || step_ema > 1.0)
        throw std::invalid_argument("LearnerState: tau must lie in (0, 1]");
    if (step_actor < 0.0 || step_critic < 0.0)
        throw std::invalid_argument("LearnerState: step sizes must be nonnegative");
    if (kappa < 0.0) throw std::invalid_argument("LearnerState: kappa must be nonnegative");
    if (projection_bound <= 0.0)
        throw std::invalid_argument("LearnerState: projection bound must be positive");
}

Vec score_weighted_sum(const Mat& probs, const Trajectory& traj,
                       std::span<const double> weights) {
    const int n = static_cast<int>(probs.rows());
    const int m = static_cast<int>(probs.cols());
    const int K = static_cast<int>(traj.actions.size());
    // grad log pi(a|s) touches only state s's logits, so the trajectory sum
    // collapses to per-state weight totals.
    Vec state_total = Vec::Zero(n);
    Mat sa_total = Mat::Zero(n, m);
    for (int i = 0; i < K; ++i) {
        state_total[traj.states[static_cast<std::size_t>(i)]] += weights[i];
        sa_total(traj.states[static_cast<std::size_t>(i)],
                 traj.actions[static_cast<std::size_t>(i)]) += weights[i];
    }
    Vec out = Vec::Zero(n * m);
    for (int s = 0; s < n; ++s) {
        if (state_total[s] == 0.0 && sa_total.row(s).isZero(0.0)) continue;
        for (int a = 0; a < m; ++a)
            out[s * m + a] = (sa_total(s, a) - state_total[s] * probs(s, a)) / K;
    }
    return out;
}

Vec project_box(Vec theta, double bound) {
    return theta.cwiseMax(-bound).cwiseMin(bound);
}

namespace {

/// Per-episode density per the configured mode, exposed as -log d(s_i) for
/// the decision states of the trajectory.
Vec resolve_neglog_density(LearnerState& state, const TabularMDP& mdp, const Mat& probs,
                           const Trajectory& traj, DensityMode mode) {
    const int K = static_cast<int>(traj.actions.size());
    const std::span<const int> decided(traj.states.data(), static_cast<std::size_t>(K));
    Vec d;
    switch (mode) {
        case DensityMode::Exact:
            d = stationary_of_matrix(policy_transition_matrix(mdp, probs));
            break;
        case DensityMode::Empirical:
            d = empirical_density(decided, mdp.n_states);
            break;
        case DensityMode::CumulativeEmpirical: {
            for (int i = 0; i < K; ++i) state.visit_counts[decided[i]] += 1.0;
            d = state.visit_counts / state.visit_counts.sum();
            break;
        }
    }
    Vec neglog(K);
    for (int i = 0; i < K; ++i) {
        const double ds = d[decided[i]];
        if (ds <= kZeroOccupancyFloor)
            throw ZeroOccupancy("visited state has zero estimated occupancy");
        neglog[i] = -std::log(ds);
    }
    return neglog;
}

/// Plug-in entropy of the episode's empirical visitation, logged for every
/// algorithm regardless of its density mode.
double episode_entropy(const Trajectory& traj, int n_states) {
    const int K = static_cast<int>(traj.actions.size());
    const std::span<const int> decided(traj.states.data(), static_cast<std::size_t>(K));
    return entropy(empirical_density(decided, n_states));
}

double mean(std::span<const double> xs) {
    double total = 0.0;
    for (double x : xs) total += x;
    return total / static_cast<double>(xs.size());
}

RunRecord make_record(const LearnerState& state, const TabularMDP& mdp, const Trajectory& traj) {
    RunRecord rec;
    rec.emp_cost = mean(traj.costs);
    rec.emp_entropy = episode_entropy(traj, mdp.n_states);
    rec.emp_oir = rec.emp_cost / (state.kappa + rec.emp_entropy);
    rec.ema_cost = state.ema_cost;
    rec.ema_entropy = state.ema_entropy;
    return rec;
}

/// Cost and entropy TD errors over the rollout with v(s_{K+1}) = 0.
void td_errors(const Trajectory& traj, const Vec& values, double mu, std::span<const double> r,
               std::vector<double>& delta) {
    const int K = static_cast<int>(traj.actions.size());
    delta.resize(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i) {
        const double v_next =
            (i + 1 < K) ? values[traj.states[static_cast<std::size_t>(i) + 1]] : 0.0;
        delta[static_cast<std::size_t>(i)] =
            r[i] - mu + v_next - values[traj.states[static_cast<std::size_t>(i)]];
    }
}

Vec critic_step(const CriticFeatures& features, const Trajectory& traj,
                std::span<const double> delta) {
    const int K = static_cast<int>(traj.actions.size());
    Vec update = Vec::Zero(features.dim());
    for (int i = 0; i < K; ++i)
        update += delta[i] * features.phi.row(traj.states[static_cast<std::size_t>(i)]);
    return update / K;
}

}  // namespace

RunRecord id_reinforce_episode(LearnerState& state, const TabularMDP& mdp, int K, StartMode start,
                               DensityMode density, Rng& rng) {
    const Mat probs = state.policy.probs(mdp.n_states, mdp.n_actions);
    const Trajectory traj = rollout_with_probs(mdp, probs, K, start, rng);

    state.ema_cost = ema_update(state.ema_cost, mean(traj.costs), state.step_ema);
    const Vec neglog = resolve_neglog_density(state, mdp, probs, traj, density);
    state.ema_entropy = ema_update(
        state.ema_entropy, mean(std::span<const double>(neglog.data(), neglog.size())),
        state.step_ema);

    const double denom = state.kappa + state.ema_entropy;
    if (denom <= kDenominatorFloor)
        throw DegenerateDenominator("kappa + mu~^H <= 1e-12 in ID-REINFORCE update");

    std::vector<double> w(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i) {
        const double cost_part = (traj.costs[static_cast<std::size_t>(i)] - state.ema_cost) * denom;
        const double entropy_part = state.ema_cost * (neglog[i] - state.ema_entropy);
        w[static_cast<std::size_t>(i)] = (cost_part - entropy_part) / (denom * denom);
    }
    state.policy.theta -= state.step_actor * score_weighted_sum(probs, traj, w);
    if (state.project) state.policy.theta = project_box(state.policy.theta, state.projection_bound);
    return make_record(state, mdp, traj);
}

RunRecord idac_episode(LearnerState& state, const TabularMDP& mdp, int K, StartMode start,
                       const CriticFeatures& features, DensityMode density, Rng& rng) {
    const Mat probs = state.policy.probs(mdp.n_states, mdp.n_actions);
    const Trajectory traj = rollout_with_probs(mdp, probs, K, start, rng);

    state.ema_cost = ema_update(state.ema_cost, mean(traj.costs), state.step_ema);
    const Vec neglog = resolve_neglog_density(state, mdp, probs, traj, density);
    state.ema_entropy = ema_update(
        state.ema_entropy, mean(std::span<const double>(neglog.data(), neglog.size())),
        state.step_ema);

    const double denom = state.kappa + state.ema_entropy;
    if (denom <= kDenominatorFloor)
        throw DegenerateDenominator("kappa + mu~^H <= 1e-12 in IDAC update");

    const Vec v_cost = features.phi * state.critic_cost;
    const Vec v_entropy = features.phi * state.critic_entropy;
    std::vector<double> delta_cost;
    std::vector<double> delta_entropy;
    td_errors(traj, v_cost, state.ema_cost,
              std::span<const double>(traj.costs.data(), traj.costs.size()), delta_cost);
    td_errors(traj, v_entropy, state.ema_entropy,
              std::span<const double>(neglog.data(), neglog.size()), delta_entropy);

    state.critic_cost += state.step_critic * critic_step(features, traj, delta_cost);
    state.critic_entropy += state.step_critic * critic_step(features, traj, delta_entropy);

    std::vector<double> w(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i)
        w[static_cast<std::size_t>(i)] =
            (delta_cost[static_cast<std::size_t>(i)] * denom -
             state.ema_cost * delta_entropy[static_cast<std::size_t>(i)]) /
            (denom * denom);
    state.policy.theta -= state.step_actor * score_weighted_sum(probs, traj, w);
    if (state.project) state.policy.theta = project_box(state.policy.theta, state.projection_bound);
    return make_record(state, mdp, traj);
}

RunRecord vanilla_ac_episode(LearnerState& state, const TabularMDP& mdp, int K, StartMode start,
                             const CriticFeatures& features, Rng& rng) {
    const Mat probs = state.policy.probs(mdp.n_states, mdp.n_actions);
    const Trajectory traj = rollout_with_probs(mdp, probs, K, start, rng);

    state.ema_cost = ema_update(state.ema_cost, mean(traj.costs), state.step_ema);

    const Vec v_cost = features.phi * state.critic_cost;
    std::vector<double> delta;
    td_errors(traj, v_cost, state.ema_cost,
              std::span<const double>(traj.costs.data(), traj.costs.size()), delta);
    state.critic_cost += state.step_critic * critic_step(features, traj, delta);
    state.policy.theta -= state.step_actor * score_weighted_sum(probs, traj, delta);
    if (state.project) state.policy.theta = project_box(state.policy.theta, state.projection_bound);

    // The entropy EMA plays no role in the vanilla update; it is refreshed
    // from the episode's empirical visitation so the logs stay comparable.
    RunRecord rec = make_record(state, mdp, traj);
    state.ema_entropy = ema_update(state.ema_entropy, rec.emp_entropy, state.step_ema);
    rec.ema_entropy = state.ema_entropy;
    return rec;
}

RunRecord max_entropy_episode(LearnerState& state, const TabularMDP& mdp, int K, StartMode start,
                              EntropyVariant variant, EntropyScheme scheme,
                              const CriticFeatures& features, DensityMode density, Rng& rng) {
    const Mat probs = state.policy.probs(mdp.n_states, mdp.n_actions);
    const Trajectory traj = rollout_with_probs(mdp, probs, K, start, rng);

    state.ema_cost = ema_update(state.ema_cost, mean(traj.costs), state.step_ema);

    Vec reward = resolve_neglog_density(state, mdp, probs, traj, density);
    if (variant == EntropyVariant::StateAction) {
        for (int i = 0; i < K; ++i)
            reward[i] -= std::log(probs(traj.states[static_cast<std::size_t>(i)],
                                        traj.actions[static_cast<std::size_t>(i)]));
    }
    state.ema_entropy = ema_update(
        state.ema_entropy, mean(std::span<const double>(reward.data(), reward.size())),
        state.step_ema);

    std::vector<double> w(static_cast<std::size_t>(K));
    if (scheme == EntropyScheme::Reinforce) {
        for (int i = 0; i < K; ++i)
            w[static_cast<std::size_t>(i)] = reward[i] - state.ema_entropy;
    } else {
        const Vec v = features.phi * state.critic_entropy;
        std::vector<double> delta;
        td_errors(traj, v, state.ema_entropy,
                  std::span<const double>(reward.data(), reward.size()), delta);
        state.critic_entropy += state.step_critic * critic_step(features, traj, delta);
        w = delta;
    }
    // Ascent on the entropy objective.
    state.policy.theta += state.step_actor * score_weighted_sum(probs, traj, w);
    if (state.project) state.policy.theta = project_box(state.policy.theta, state.projection_bound);
    return make_record(state, mdp, traj);
}

PgdResult exact_projected_gd(const TabularMDP& mdp, double kappa, const Vec& theta0, double eta,
                             int steps, double box_bound, std::optional<double> rho_star) {
    PgdResult result;
    result.rho_star = rho_star ? *rho_star : solve_oir(mdp, kappa).objective;
    SoftmaxPolicy policy{project_box(theta0, box_bound)};
    result.thetas.reserve(static_cast<std::size_t>(steps));
    result.rhos.reserve(static_cast<std::size_t>(steps));
    result.gaps.reserve(static_cast<std::size_t>(steps));
    for (int t = 0; t < steps; ++t) {
        const OccupancyStats stats = occupancy_stats(mdp, policy, kappa);
        result.thetas.push_back(policy.theta);
        result.rhos.push_back(stats.oir);
        result.gaps.push_back(stats.oir - result.rho_star);
        const Vec grad = exact_oir_gradient(mdp, policy, kappa);
        policy.theta = project_box(policy.theta - eta * grad, box_bound);
    }
    result.final_theta = policy.theta;
    return result;
}

namespace {

/// Sum over the stationary law of w(s,a) grad log pi(a|s).
Vec stationary_score_sum(const Vec& d, const Mat& probs, const Mat& w) {
    const int n = static_cast<int>(probs.rows());
    const int m = static_cast<int>(probs.cols());
    Vec out = Vec::Zero(n * m);
    for (int s = 0; s < n; ++s) {
        const double baseline = probs.row(s).dot(w.row(s));
        for (int a = 0; a < m; ++a)
            out[s * m + a] = d[s] * probs(s, a) * (w(s, a) - baseline);
    }
    return out;
}

}  // namespace

Vec expected_oir_update_direction(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                                  double kappa) {
    const OccupancyStats stats = occupancy_stats(mdp, policy, kappa);
    const Mat probs = policy.probs(mdp.n_states, mdp.n_actions);
    const RelativeValues rv_cost = relative_values(mdp, policy, mdp.cost);
    const ShadowMDP shadow = state_shadow(mdp, stats.d);
    const RelativeValues rv_entropy = relative_values(mdp, policy, shadow.shadow_reward);

    const double denom = kappa + stats.entropy_d;
    Mat w(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            const double adv_cost = rv_cost.action_values(s, a) - rv_cost.state_values[s];
            const double adv_entropy =
                rv_entropy.action_values(s, a) - rv_entropy.state_values[s];
            w(s, a) = (adv_cost * denom - stats.avg_cost * adv_entropy) / (denom * denom);
        }
    }
    return stationary_score_sum(stats.d, probs, w);
}

Vec expected_entropy_update_direction(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                                      EntropyVariant variant) {
    const Mat probs = policy.probs(mdp.n_states, mdp.n_actions);
    const Vec d = stationary_of_matrix(policy_transition_matrix(mdp, probs));
    const ShadowMDP shadow = (variant == EntropyVariant::State)
                                 ? state_shadow(mdp, d)
                                 : state_action_shadow(mdp, d, probs);
    const RelativeValues rv = relative_values(mdp, policy, shadow.shadow_reward);
    Mat w(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a)
            w(s, a) = rv.action_values(s, a) - rv.state_values[s];
    return stationary_score_sum(d, probs, w);
}

}  // namespace oir
