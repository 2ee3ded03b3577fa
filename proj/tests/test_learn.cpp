// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "oir/envs.hpp"
#include "oir/errors.hpp"
#include "oir/learn.hpp"
#include "oir/solve.hpp"
#include "oir/verify.hpp"

using namespace oir;

namespace {

LearnerState simple_learner(const TabularMDP& mdp, const CriticFeatures& feat, double kappa = 1.0,
                            double alpha = 0.5, double beta = 1.0, double tau = 0.1) {
    return LearnerState::make(mdp, feat, kappa, alpha, beta, tau);
}

}  // namespace

TEST_CASE("ema_update: recursion matches the reference expression bit for bit") {
    Rng rng(3);
    double mu = 0.7;
    double reference = 0.7;
    const double tau = 0.1;
    for (int t = 0; t < 100; ++t) {
        const double x = rng.uniform(0.0, 5.0);
        mu = ema_update(mu, x, tau);
        reference = (1.0 - tau) * reference + tau * x;
        CHECK(mu == reference);
    }
    // tau = 1 recovers the single-batch estimate exactly
    CHECK(ema_update(0.123, 4.56, 1.0) == 4.56);
}

TEST_CASE("projection: idempotent and nonexpansive on the box") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        Vec x(8);
        Vec y(8);
        for (int i = 0; i < 8; ++i) {
            x[i] = rng.uniform(-120.0, 120.0);
            y[i] = rng.uniform(-120.0, 120.0);
        }
        const Vec px = project_box(x, 50.0);
        CHECK((project_box(px, 50.0) - px).cwiseAbs().maxCoeff() == 0.0);
        CHECK(px.cwiseAbs().maxCoeff() <= 50.0);
        const Vec py = project_box(y, 50.0);
        CHECK((px - py).norm() <= (x - y).norm() + 1e-12);
    }
}

TEST_CASE("IDAC actor step reduces to vanilla AC scaled by 1/(kappa+mu) when deltaH = 0") {
    const TabularMDP mdp = build_simple_env();
    Rng rng(7);
    const SoftmaxPolicy policy = random_policy(rng, 5, 5, 1.0);
    const Mat probs = policy.probs(5, 5);
    const Trajectory traj = rollout(mdp, policy, 50, StartUniform{}, rng);

    // synthetic TD-error streams
    std::vector<double> delta_cost(50);
    for (auto& d : delta_cost) d = rng.uniform(-1.0, 1.0);
    const double mu_h = 1.2;
    const double mu_j = 1.7;
    const double kappa = 1.0;
    const double denom = kappa + mu_h;

    std::vector<double> idac_w(50);
    for (int i = 0; i < 50; ++i)
        idac_w[static_cast<std::size_t>(i)] =
            (delta_cost[static_cast<std::size_t>(i)] * denom - mu_j * 0.0) / (denom * denom);
    const Vec idac_dir = score_weighted_sum(probs, traj, idac_w);
    const Vec vanilla_dir = score_weighted_sum(probs, traj, delta_cost);
    CHECK((idac_dir - vanilla_dir / denom).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("expected update directions match the exact gradients") {
    Rng rng(11);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 2 + rng.uniform_int(3);
        const int m = 2 + rng.uniform_int(3);
        const TabularMDP mdp = random_mdp(rng, n, m);
        const SoftmaxPolicy policy = random_policy(rng, n, m, 1.2);

        const Vec oir_dir = expected_oir_update_direction(mdp, policy, 1.0);
        const Vec oir_exact = exact_oir_gradient(mdp, policy, 1.0);
        CHECK((oir_dir - oir_exact).cwiseAbs().maxCoeff() < 1e-6);

        const Vec h_dir = expected_entropy_update_direction(mdp, policy, EntropyVariant::State);
        const Vec h_exact = exact_entropy_gradient(mdp, policy);
        CHECK((h_dir - h_exact).cwiseAbs().maxCoeff() < 1e-6);

        const Vec sa_dir =
            expected_entropy_update_direction(mdp, policy, EntropyVariant::StateAction);
        const Vec sa_exact = exact_state_action_entropy_gradient(mdp, policy);
        CHECK((sa_dir - sa_exact).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("learners are deterministic functions of the seed") {
    const TabularMDP mdp = build_simple_env();
    const CriticFeatures feat = CriticFeatures::identity(5);
    auto run = [&](std::uint64_t seed) {
        LearnerState st = simple_learner(mdp, feat);
        Rng rng(seed);
        std::vector<RunRecord> recs;
        for (int ep = 0; ep < 50; ++ep)
            recs.push_back(
                idac_episode(st, mdp, 100, StartUniform{}, feat, DensityMode::Empirical, rng));
        return recs;
    };
    const auto a = run(123);
    const auto b = run(123);
    const auto c = run(124);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].emp_cost == b[i].emp_cost);
        CHECK(a[i].emp_entropy == b[i].emp_entropy);
        CHECK(a[i].ema_cost == b[i].ema_cost);
    }
    bool any_different = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].emp_cost != c[i].emp_cost) any_different = true;
    CHECK(any_different);
}

TEST_CASE("id_reinforce: tau = 1 makes the EMA equal the batch estimate") {
    const TabularMDP mdp = build_simple_env();
    const CriticFeatures feat = CriticFeatures::identity(5);
    LearnerState st = simple_learner(mdp, feat, 1.0, 0.5, 1.0, 1.0);
    Rng rng(9);
    const RunRecord rec =
        id_reinforce_episode(st, mdp, 200, StartUniform{}, DensityMode::Empirical, rng);
    CHECK(rec.ema_cost == rec.emp_cost);
}

TEST_CASE("id_reinforce: SimpleEnv exposes the one-step estimator's blind spot") {
    // On SimpleEnv the per-step weight depends only on the current state
    // while the sampled action is independent of it, so the stationary
    // expected update vanishes and the policy random-walks near its start
    // instead of descending to rho*. IDAC (bootstrapped advantages) is the
    // algorithm that converges here; see the actor-critic tests.
    const TabularMDP mdp = build_simple_env();
    const CriticFeatures feat = CriticFeatures::identity(5);
    LearnerState st = simple_learner(mdp, feat, 1.0, 0.5, 1.0, 0.1);
    Rng rng(33);
    for (int ep = 0; ep < 400; ++ep)
        id_reinforce_episode(st, mdp, 200, StartUniform{}, DensityMode::Exact, rng);
    const OccupancyStats fin = occupancy_stats(mdp, st.policy, 1.0);
    const double rho_uniform = occupancy_stats(mdp, SoftmaxPolicy::zeros(5, 5), 1.0).oir;
    CHECK(std::abs(fin.oir - rho_uniform) < 0.02);
}

TEST_CASE("id_reinforce: descends the ratio when the cost carries action information") {
    // Two-state chain where actions steer both transitions and costs; the
    // one-step estimator is biased but carries signal, so the ratio drops.
    TabularMDP mdp;
    mdp.n_states = 2;
    mdp.n_actions = 2;
    mdp.transition = Mat(4, 2);
    mdp.transition.row(0) << 0.9, 0.1;
    mdp.transition.row(1) << 0.2, 0.8;
    mdp.transition.row(2) << 0.7, 0.3;
    mdp.transition.row(3) << 0.1, 0.9;
    mdp.cost = Mat(2, 2);
    mdp.cost << 0.5, 3.0,
                2.5, 4.0;
    mdp.validate();
    const CriticFeatures feat = CriticFeatures::identity(2);
    LearnerState st = LearnerState::make(mdp, feat, 1.0, 0.2, 1.0, 0.1);
    const double rho0 = occupancy_stats(mdp, st.policy, 1.0).oir;
    Rng rng(35);
    for (int ep = 0; ep < 1500; ++ep)
        id_reinforce_episode(st, mdp, 200, StartUniform{}, DensityMode::Empirical, rng);
    const double rho1 = occupancy_stats(mdp, st.policy, 1.0).oir;
    CHECK(rho1 < rho0 - 0.01);
}

TEST_CASE("max-entropy learners reach the SimpleEnv entropy ceilings") {
    const TabularMDP mdp = build_simple_env();
    const CriticFeatures feat = CriticFeatures::identity(5);

    // Start from a deliberately low-entropy policy.
    auto skewed_start = [&](LearnerState& st) {
        for (int s = 0; s < 5; ++s) st.policy.theta[s * 5] = 2.0;
    };

    SUBCASE("state variant (actor-critic) approaches ln 5") {
        LearnerState st = simple_learner(mdp, feat, 1.0, 0.5, 1.0, 0.1);
        skewed_start(st);
        Rng rng(13);
        for (int ep = 0; ep < 500; ++ep)
            max_entropy_episode(st, mdp, 200, StartUniform{}, EntropyVariant::State,
                                EntropyScheme::ActorCritic, feat, DensityMode::Empirical, rng);
        const OccupancyStats stats = occupancy_stats(mdp, st.policy, 1.0);
        CHECK(stats.entropy_d >= std::log(5.0) - 0.05);
    }
    SUBCASE("state-action variant (actor-critic) approaches ln 25") {
        LearnerState st = simple_learner(mdp, feat, 1.0, 0.5, 1.0, 0.1);
        skewed_start(st);
        Rng rng(17);
        for (int ep = 0; ep < 500; ++ep)
            max_entropy_episode(st, mdp, 200, StartUniform{}, EntropyVariant::StateAction,
                                EntropyScheme::ActorCritic, feat, DensityMode::Empirical, rng);
        const OccupancyStats stats = occupancy_stats(mdp, st.policy, 1.0);
        CHECK(stats.entropy_lambda >= std::log(25.0) - 0.1);
    }
    SUBCASE("state-action variant (REINFORCE) approaches ln 25") {
        LearnerState st = simple_learner(mdp, feat, 1.0, 0.5, 1.0, 0.1);
        skewed_start(st);
        Rng rng(19);
        for (int ep = 0; ep < 500; ++ep)
            max_entropy_episode(st, mdp, 200, StartUniform{}, EntropyVariant::StateAction,
                                EntropyScheme::Reinforce, feat, DensityMode::Empirical, rng);
        const OccupancyStats stats = occupancy_stats(mdp, st.policy, 1.0);
        CHECK(stats.entropy_lambda >= std::log(25.0) - 0.1);
    }
    SUBCASE("state variant (REINFORCE) with the oracle density has a zero-mean update") {
        // The weight -log d(s_i) - mu is measurable from the state while the
        // concurrent action's score is conditionally zero mean, so the
        // stationary expected update vanishes; the policy random-walks
        // around its start. The bootstrapped actor-critic variant is the one
        // that climbs (previous subcases).
        LearnerState st = simple_learner(mdp, feat, 1.0, 0.5, 1.0, 0.1);
        skewed_start(st);
        const double h0 = occupancy_stats(mdp, st.policy, 1.0).entropy_d;
        Rng rng(21);
        for (int ep = 0; ep < 500; ++ep)
            max_entropy_episode(st, mdp, 200, StartUniform{}, EntropyVariant::State,
                                EntropyScheme::Reinforce, feat, DensityMode::Exact, rng);
        const OccupancyStats stats = occupancy_stats(mdp, st.policy, 1.0);
        CHECK(std::abs(stats.entropy_d - h0) < 0.1);
    }
}

TEST_CASE("all learners are replayable: same seed, same records") {
    const TabularMDP mdp = build_simple_env();
    const CriticFeatures feat = CriticFeatures::identity(5);
    auto drive = [&](int which, std::uint64_t seed) {
        LearnerState st = simple_learner(mdp, feat);
        Rng rng(seed);
        std::vector<double> trace;
        for (int ep = 0; ep < 25; ++ep) {
            RunRecord rec;
            switch (which) {
                case 0:
                    rec = id_reinforce_episode(st, mdp, 80, StartUniform{},
                                               DensityMode::Empirical, rng);
                    break;
                case 1:
                    rec = idac_episode(st, mdp, 80, StartUniform{}, feat,
                                       DensityMode::CumulativeEmpirical, rng);
                    break;
                case 2:
                    rec = vanilla_ac_episode(st, mdp, 80, StartUniform{}, feat, rng);
                    break;
                case 3:
                    rec = max_entropy_episode(st, mdp, 80, StartUniform{}, EntropyVariant::State,
                                              EntropyScheme::ActorCritic, feat,
                                              DensityMode::Empirical, rng);
                    break;
                default:
                    rec = max_entropy_episode(st, mdp, 80, StartUniform{},
                                              EntropyVariant::StateAction,
                                              EntropyScheme::Reinforce, feat,
                                              DensityMode::Empirical, rng);
            }
            trace.push_back(rec.emp_cost);
            trace.push_back(rec.ema_entropy);
        }
        return trace;
    };
    for (int which = 0; which < 5; ++which) CHECK(drive(which, 7) == drive(which, 7));
}

TEST_CASE("vanilla AC plateaus near the allowed cost on GridWorld2 and GridWorld3") {
    for (const char* name : {"gridworld2", "gridworld3"}) {
        const GridSpec spec = parse_map(builtin_map(name), 1.0, 10.0, 100.0);
        const GridWorld world = build_gridworld(spec);
        const CriticFeatures feat = CriticFeatures::identity(world.mdp.n_states);
        std::vector<double> finals;
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            LearnerState st = LearnerState::make(world.mdp, feat, 1.0, 1.8, 2.0, 0.1);
            Rng rng(seed);
            RunRecord last;
            for (int ep = 0; ep < 1200; ++ep)
                last = vanilla_ac_episode(st, world.mdp, 200, StartFixed{world.start_state},
                                          feat, rng);
            finals.push_back(last.emp_cost);
        }
        std::sort(finals.begin(), finals.end());
        CHECK(finals[1] >= 9.5);
        CHECK(finals[1] <= 10.5);
    }
}

TEST_CASE("exact projected gradient descent: small steps never increase rho") {
    const TabularMDP mdp = build_simple_env();
    Rng rng(19);
    Vec theta0(25);
    for (int i = 0; i < 25; ++i) theta0[i] = rng.uniform(-1.0, 1.0);
    const PgdResult run = exact_projected_gd(mdp, 1.0, theta0, 1e-3, 10000, 50.0, 0.0);
    for (std::size_t t = 1; t < run.rhos.size(); ++t)
        CHECK(run.rhos[t] <= run.rhos[t - 1] + 1e-12);
}

TEST_CASE("enabled projection keeps every logit inside the box") {
    const TabularMDP mdp = build_simple_env();
    const CriticFeatures feat = CriticFeatures::identity(5);
    LearnerState st = simple_learner(mdp, feat, 1.0, /*alpha=*/25.0, /*beta=*/1.0, 0.5);
    st.project = true;
    st.projection_bound = 1.5;  // deliberately tight so the box binds
    Rng rng(41);
    for (int ep = 0; ep < 100; ++ep) {
        idac_episode(st, mdp, 100, StartUniform{}, feat, DensityMode::Empirical, rng);
        CHECK(st.policy.theta.cwiseAbs().maxCoeff() <= 1.5);
    }
}

TEST_CASE("critic features: rank validation and the constant-vector probe") {
    CriticFeatures identity = CriticFeatures::identity(4);
    identity.validate();
    CHECK(identity.spans_constant());

    CriticFeatures partial{Mat::Identity(4, 3)};
    partial.validate();
    CHECK(!partial.spans_constant());

    CriticFeatures deficient{Mat::Zero(4, 2)};
    deficient.phi.col(0).setOnes();
    deficient.phi.col(1).setOnes();
    CHECK_THROWS_AS(deficient.validate(), std::invalid_argument);
}

TEST_CASE("learner state validation") {
    const TabularMDP mdp = build_simple_env();
    const CriticFeatures feat = CriticFeatures::identity(5);
    CHECK_THROWS_AS(LearnerState::make(mdp, feat, 1.0, 0.5, 1.0, 0.1, 0.0, 1.0),
                    std::invalid_argument);  // ema must start > 0
    CHECK_THROWS_AS(LearnerState::make(mdp, feat, 1.0, 0.5, 1.0, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(LearnerState::make(mdp, feat, -1.0, 0.5, 1.0, 0.1), std::invalid_argument);
}

TEST_CASE("frozen-policy critic matches the unique fixed point under reduced features") {
    // Features spanning no constant vector make the TD fixed-point system
    // nonsingular, so the comparison needs no quotient by the all-ones
    // direction. The oracle solves the batched system directly, including
    // the (1 - 1/K) discount introduced by the terminal value convention.
    const TabularMDP mdp = build_simple_env();
    const int K = 200;
    CriticFeatures feat{Mat::Identity(5, 4)};  // e_1..e_4, last state dropped
    feat.validate();
    REQUIRE(!feat.spans_constant());

    LearnerState st = LearnerState::make(mdp, feat, 1.0, /*alpha=*/0.0, /*beta=*/1.0,
                                         /*tau=*/1.0);
    const double logits[5] = {0.4, 0.0, -0.2, 0.1, -0.3};
    for (int s = 0; s < 5; ++s)
        for (int a = 0; a < 5; ++a) st.policy.theta[s * 5 + a] = logits[a];
    const SoftmaxPolicy frozen = st.policy;

    Rng rng(43);
    // The slowest mode of the projected system relaxes at rate
    // beta * d_min * (1 - gamma (1 - pi_4)) ~ 0.02 beta, so the harmonic
    // schedule needs a generous horizon before the noise floor is reached.
    for (long n = 0; n < 100000; ++n) {
        const double step = 0.5 / (1.0 + static_cast<double>(n) / 100.0);
        st.step_critic = step;
        st.step_ema = std::min(1.0, step);
        idac_episode(st, mdp, K, StartStationary{}, feat, DensityMode::Exact, rng);
    }

    const Mat probs = frozen.probs(5, 5);
    const Mat P = policy_transition_matrix(mdp, probs);
    const Vec d = stationary_of_matrix(P);
    const Vec cost_pi = (probs.array() * mdp.cost.array()).rowwise().sum();
    const double gain = d.dot(cost_pi);
    const Mat D = d.asDiagonal();
    const Mat system =
        feat.phi.transpose() * D *
        (Mat::Identity(5, 5) - (1.0 - 1.0 / K) * P) * feat.phi;
    const Vec rhs = feat.phi.transpose() * D * (cost_pi - Vec::Constant(5, gain));
    const Vec omega_star = system.colPivHouseholderQr().solve(rhs);
    CHECK((st.critic_cost - omega_star).cwiseAbs().maxCoeff() < 2.5e-3);
}

TEST_CASE("frozen-policy critic heads toward the Poisson solution (quick)") {
    const TabularMDP mdp = build_simple_env();
    const CriticFeatures feat = CriticFeatures::identity(5);
    LearnerState st = simple_learner(mdp, feat, 1.0, /*alpha=*/0.0, /*beta=*/0.3, 0.2);
    Rng rng(23);
    for (int ep = 0; ep < 3000; ++ep)
        idac_episode(st, mdp, 200, StartUniform{}, feat, DensityMode::Exact, rng);

    const SoftmaxPolicy uniform = SoftmaxPolicy::zeros(5, 5);
    const RelativeValues rv = relative_values(mdp, uniform, mdp.cost);
    // compare against the solution line V* + c 1
    const Vec diff = st.critic_cost - rv.state_values;
    const Vec centered = diff - Vec::Constant(5, diff.mean());
    CHECK(centered.cwiseAbs().maxCoeff() < 0.05);
}
