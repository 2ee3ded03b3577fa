// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "oir/mdp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "oir/errors.hpp"

namespace oir {

namespace {
constexpr double kRowSumTol = 1e-12;
constexpr double kZeroOccupancyFloor = 1e-300;
constexpr double kDenominatorFloor = 1e-12;
}  // namespace

void TabularMDP::validate() const {
    if (n_states <= 0 || n_actions <= 0)
        throw std::invalid_argument("TabularMDP: state and action counts must be positive");
    if (transition.rows() != n_states * n_actions || transition.cols() != n_states)
        throw std::invalid_argument("TabularMDP: transition table has wrong shape");
    if (cost.rows() != n_states || cost.cols() != n_actions)
        throw std::invalid_argument("TabularMDP: cost table has wrong shape");
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            const auto row = transition.row(sa(s, a));
            if ((row.array() < 0.0).any())
                throw std::invalid_argument("TabularMDP: negative transition probability");
            if (std::abs(row.sum() - 1.0) > kRowSumTol) {
                std::ostringstream msg;
                msg << "TabularMDP: transition row (" << s << "," << a << ") sums to "
                    << row.sum();
                throw std::invalid_argument(msg.str());
            }
            if (cost(s, a) <= 0.0)
                throw std::invalid_argument("TabularMDP: costs must be strictly positive");
        }
    }
}

Mat SoftmaxPolicy::probs(int n_states, int n_actions) const {
    Mat p(n_states, n_actions);
    for (int s = 0; s < n_states; ++s) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < n_actions; ++a) mx = std::max(mx, theta[s * n_actions + a]);
        double z = 0.0;
        for (int a = 0; a < n_actions; ++a) {
            p(s, a) = std::exp(theta[s * n_actions + a] - mx);
            z += p(s, a);
        }
        p.row(s) /= z;
    }
    return p;
}

Mat policy_transition_matrix(const TabularMDP& mdp, const Mat& probs) {
    Mat P = Mat::Zero(mdp.n_states, mdp.n_states);
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a)
            P.row(s) += probs(s, a) * mdp.transition.row(mdp.sa(s, a));
    return P;
}

namespace {

Vec stationary_power_iteration(const Mat& P) {
    const int n = static_cast<int>(P.rows());
    Vec d = Vec::Constant(n, 1.0 / n);
    const Mat Pt = P.transpose();
    for (long it = 0; it < 1000000; ++it) {
        Vec next = Pt * d;
        next /= next.sum();
        const double delta = (next - d).cwiseAbs().maxCoeff();
        d = next;
        if (delta < 1e-13) return d;
    }
    throw NonUniqueStationary("power iteration did not converge (periodic or reducible chain?)");
}

}  // namespace

Vec stationary_of_matrix(const Mat& P) {
    const int n = static_cast<int>(P.rows());
    // Balance system (I - P^T) d = 0. Its columns sum to zero, so any single
    // equation is redundant; the last one is replaced by the normalization.
    Mat A = Mat::Identity(n, n) - P.transpose();
    Eigen::ColPivHouseholderQR<Mat> rank_qr(A);
    rank_qr.setThreshold(1e-9);
    if (rank_qr.rank() < n - 1) {
        std::ostringstream msg;
        msg << "stationary distribution is not unique: balance system rank " << rank_qr.rank()
            << " < " << (n - 1) << " for an " << n << "-state chain";
        throw NonUniqueStationary(msg.str());
    }
    A.row(n - 1).setOnes();
    Vec b = Vec::Zero(n);
    b[n - 1] = 1.0;

    Eigen::ColPivHouseholderQR<Mat> qr(A);
    Vec d = qr.solve(b);
    const double residual = (P.transpose() * d - d).cwiseAbs().maxCoeff();
    const double min_entry = d.minCoeff();
    if (!d.allFinite() || residual > 1e-10 || min_entry < -1e-10) {
        d = stationary_power_iteration(P);
    }
    d = d.cwiseMax(0.0);
    d /= d.sum();
    return d;
}

Vec stationary_distribution(const TabularMDP& mdp, const SoftmaxPolicy& policy) {
    const Mat probs = policy.probs(mdp.n_states, mdp.n_actions);
    return stationary_of_matrix(policy_transition_matrix(mdp, probs));
}

double entropy(const Vec& dist) {
    double h = 0.0;
    for (int i = 0; i < dist.size(); ++i)
        if (dist[i] > 0.0) h -= dist[i] * std::log(dist[i]);
    return h;
}

Vec flatten_sa(const Mat& table) {
    const int n = static_cast<int>(table.rows());
    const int m = static_cast<int>(table.cols());
    Vec flat(n * m);
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < m; ++a) flat[s * m + a] = table(s, a);
    return flat;
}

Mat unflatten_sa(const Vec& flat, int n_states, int n_actions) {
    Mat table(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) table(s, a) = flat[s * n_actions + a];
    return table;
}

OccupancyStats occupancy_stats(const TabularMDP& mdp, const SoftmaxPolicy& policy, double kappa) {
    if (kappa < 0.0) throw std::invalid_argument("occupancy_stats: kappa must be nonnegative");
    OccupancyStats out;
    const Mat probs = policy.probs(mdp.n_states, mdp.n_actions);
    out.d = stationary_of_matrix(policy_transition_matrix(mdp, probs));
    out.lambda = out.d.asDiagonal() * probs;
    out.avg_cost = (out.lambda.array() * mdp.cost.array()).sum();
    out.entropy_d = entropy(out.d);
    out.entropy_lambda = entropy(flatten_sa(out.lambda));
    out.kappa = kappa;
    const double denom = kappa + out.entropy_d;
    if (denom <= kDenominatorFloor)
        throw DegenerateDenominator("kappa + H(d) <= 1e-12: information ratio undefined");
    out.oir = out.avg_cost / denom;
    return out;
}

ShadowMDP state_shadow(const TabularMDP& mdp, const Vec& d_ref) {
    ShadowMDP shadow{&mdp, Mat(mdp.n_states, mdp.n_actions)};
    for (int s = 0; s < mdp.n_states; ++s) {
        if (d_ref[s] <= kZeroOccupancyFloor)
            throw ZeroOccupancy("state occupancy underflow: shadow reward -log d(s) is infinite");
        shadow.shadow_reward.row(s).setConstant(-std::log(d_ref[s]));
    }
    return shadow;
}

ShadowMDP state_action_shadow(const TabularMDP& mdp, const Vec& d_ref, const Mat& probs_ref) {
    ShadowMDP shadow{&mdp, Mat(mdp.n_states, mdp.n_actions)};
    for (int s = 0; s < mdp.n_states; ++s) {
        if (d_ref[s] <= kZeroOccupancyFloor)
            throw ZeroOccupancy("state occupancy underflow: shadow reward -log d(s) is infinite");
        for (int a = 0; a < mdp.n_actions; ++a)
            shadow.shadow_reward(s, a) = -std::log(d_ref[s]) - std::log(probs_ref(s, a));
    }
    return shadow;
}

RelativeValues relative_values(const TabularMDP& mdp, const SoftmaxPolicy& policy,
                               const Mat& signal) {
    const int n = mdp.n_states;
    const Mat probs = policy.probs(n, mdp.n_actions);
    const Mat P = policy_transition_matrix(mdp, probs);
    const Vec d = stationary_of_matrix(P);
    const Vec signal_pi = (probs.array() * signal.array()).rowwise().sum();

    // Bordered Poisson system: (I - P) V + g 1 = signal_pi, d^T V = 0.
    Mat A = Mat::Zero(n + 1, n + 1);
    A.topLeftCorner(n, n) = Mat::Identity(n, n) - P;
    A.topRightCorner(n, 1).setOnes();
    A.bottomLeftCorner(1, n) = d.transpose();
    Vec b = Vec::Zero(n + 1);
    b.head(n) = signal_pi;

    const Vec sol = A.colPivHouseholderQr().solve(b);
    RelativeValues rv;
    rv.state_values = sol.head(n);
    rv.gain = sol[n];
    rv.action_values = Mat(n, mdp.n_actions);
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < mdp.n_actions; ++a)
            rv.action_values(s, a) =
                signal(s, a) - rv.gain + mdp.transition.row(mdp.sa(s, a)).dot(rv.state_values);
    return rv;
}

Vec exact_signal_gradient(const TabularMDP& mdp, const SoftmaxPolicy& policy, const Mat& signal) {
    const int n = mdp.n_states;
    const int m = mdp.n_actions;
    const Mat probs = policy.probs(n, m);
    const Vec d = stationary_of_matrix(policy_transition_matrix(mdp, probs));
    const RelativeValues rv = relative_values(mdp, policy, signal);

    // For one-hot features the gradient collapses per state to
    // d(s) pi(a|s) (Q(s,a) - V(s)); the baseline makes each state's logits
    // sum to zero.
    Vec grad = Vec::Zero(n * m);
    for (int s = 0; s < n; ++s) {
        const double baseline = probs.row(s).dot(rv.action_values.row(s));
        for (int a = 0; a < m; ++a)
            grad[mdp.sa(s, a)] = d[s] * probs(s, a) * (rv.action_values(s, a) - baseline);
    }
    return grad;
}

Vec exact_avg_cost_gradient(const TabularMDP& mdp, const SoftmaxPolicy& policy) {
    return exact_signal_gradient(mdp, policy, mdp.cost);
}

Vec exact_entropy_gradient(const TabularMDP& mdp, const SoftmaxPolicy& policy) {
    const Vec d = stationary_distribution(mdp, policy);
    const ShadowMDP shadow = state_shadow(mdp, d);
    return exact_signal_gradient(mdp, policy, shadow.shadow_reward);
}

Vec exact_state_action_entropy_gradient(const TabularMDP& mdp, const SoftmaxPolicy& policy) {
    const Mat probs = policy.probs(mdp.n_states, mdp.n_actions);
    const Vec d = stationary_of_matrix(policy_transition_matrix(mdp, probs));
    const ShadowMDP shadow = state_action_shadow(mdp, d, probs);
    return exact_signal_gradient(mdp, policy, shadow.shadow_reward);
}

Vec exact_oir_gradient(const TabularMDP& mdp, const SoftmaxPolicy& policy, double kappa) {
    const OccupancyStats stats = occupancy_stats(mdp, policy, kappa);
    const Vec grad_cost = exact_avg_cost_gradient(mdp, policy);
    const Vec grad_entropy = exact_entropy_gradient(mdp, policy);
    const double denom = kappa + stats.entropy_d;
    return (grad_cost * denom - stats.avg_cost * grad_entropy) / (denom * denom);
}

Vec empirical_density(std::span<const int> states, int n_states) {
    if (states.empty()) throw EmptyTrajectory("empirical_density: empty state sequence");
    Vec counts = Vec::Zero(n_states);
    for (int s : states) counts[s] += 1.0;
    return counts / static_cast<double>(states.size());
}

}  // namespace oir
