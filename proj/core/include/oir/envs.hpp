// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "oir/mdp.hpp"
#include "oir/rng.hpp"

namespace oir {

/// Grid cell as (col, row), row 0 at the top.
struct Cell {
    int x = 0;
    int y = 0;
    auto operator<=>(const Cell&) const = default;
};

/// Declarative gridworld description. Costs must satisfy
/// 0 < c_goal < c_allowed < c_blocked.
struct GridSpec {
    int width = 0;
    int height = 0;
    Cell start;
    Cell goal;
    std::set<Cell> blocked;
    double c_goal = 1.0;
    double c_allowed = 10.0;
    double c_blocked = 100.0;

    void validate() const;
};

/// A gridworld compiled to a TabularMDP plus the cell labeling of its states
/// (blocked cells are removed from the state set entirely).
struct GridWorld {
    TabularMDP mdp;
    GridSpec spec;
    std::vector<Cell> cells;  // state index -> cell
    int start_state = 0;
    int goal_state = 0;
};

/// Fixed-length sampled episode: states has one more entry than actions.
struct Trajectory {
    std::vector<int> states;
    std::vector<int> actions;
    std::vector<double> costs;
};

struct StartFixed {
    int state = 0;
};
struct StartUniform {};
struct StartStationary {};
using StartMode = std::variant<StartFixed, StartUniform, StartStationary>;

/// Gridworld action order: stay, up, down, left, right.
inline constexpr int kGridActions = 5;

/// Five-state, five-action bandit-like environment: action a jumps straight
/// to state a; state 0 costs 1 per step, every other state costs 2.
TabularMDP build_simple_env();

/// Compile a GridSpec. Moves are deterministic; stepping off the grid or into
/// a blocked cell leaves the agent in place at cost c_blocked. Throws
/// UnreachableGoal if the goal cannot be reached from the start.
GridWorld build_gridworld(const GridSpec& spec);

/// Parse an ASCII map ('.' free, '#' blocked, 'S' start, 'G' goal; rows top
/// to bottom). Rejects ragged rows, unknown characters, and missing or
/// duplicate markers. Costs are supplied separately.
GridSpec parse_map(const std::string& text, double c_goal, double c_allowed, double c_blocked);
GridSpec load_map_file(const std::string& path, double c_goal, double c_allowed,
                       double c_blocked);

/// Shipped layouts (same text as the maps/ directory).
const std::string& builtin_map(const std::string& name);

/// Sample exactly K transitions from the policy and kernel. Deterministic
/// given the generator state.
Trajectory rollout(const TabularMDP& mdp, const SoftmaxPolicy& policy, int K, StartMode start,
                   Rng& rng);

/// Rollout against a precomputed action-probability matrix (the learning
/// loops reuse one matrix per episode).
Trajectory rollout_with_probs(const TabularMDP& mdp, const Mat& probs, int K, StartMode start,
                              Rng& rng);

}  // namespace oir
