// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "oir/envs.hpp"

#include <deque>
#include <fstream>
#include <map>
#include <sstream>

#include "oir/errors.hpp"

namespace oir {

void GridSpec::validate() const {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("GridSpec: width and height must be positive");
    auto in_bounds = [&](const Cell& c) {
        return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height;
    };
    if (!in_bounds(start) || !in_bounds(goal))
        throw std::invalid_argument("GridSpec: start/goal out of bounds");
    if (blocked.count(start) || blocked.count(goal))
        throw std::invalid_argument("GridSpec: start/goal must not be blocked");
    if (start == goal) throw std::invalid_argument("GridSpec: start must differ from goal");
    if (!(0.0 < c_goal && c_goal < c_allowed && c_allowed < c_blocked))
        throw std::invalid_argument("GridSpec: need 0 < c_goal < c_allowed < c_blocked");
}

TabularMDP build_simple_env() {
    TabularMDP mdp;
    mdp.n_states = 5;
    mdp.n_actions = 5;
    mdp.transition = Mat::Zero(25, 5);
    mdp.cost = Mat::Zero(5, 5);
    for (int s = 0; s < 5; ++s) {
        for (int a = 0; a < 5; ++a) {
            mdp.transition(mdp.sa(s, a), a) = 1.0;  // jump straight to state a
            mdp.cost(s, a) = (s == 0) ? 1.0 : 2.0;
        }
    }
    mdp.validate();
    return mdp;
}

GridWorld build_gridworld(const GridSpec& spec) {
    spec.validate();

    GridWorld world;
    world.spec = spec;
    std::map<Cell, int> index;
    for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
            Cell c{x, y};
            if (spec.blocked.count(c)) continue;
            index[c] = static_cast<int>(world.cells.size());
            world.cells.push_back(c);
        }
    }
    const int n = static_cast<int>(world.cells.size());
    world.start_state = index.at(spec.start);
    world.goal_state = index.at(spec.goal);

    // stay, up, down, left, right
    static constexpr int dx[kGridActions] = {0, 0, 0, -1, 1};
    static constexpr int dy[kGridActions] = {0, -1, 1, 0, 0};

    TabularMDP& mdp = world.mdp;
    mdp.n_states = n;
    mdp.n_actions = kGridActions;
    mdp.transition = Mat::Zero(n * kGridActions, n);
    mdp.cost = Mat::Zero(n, kGridActions);
    for (int s = 0; s < n; ++s) {
        const Cell c = world.cells[s];
        for (int a = 0; a < kGridActions; ++a) {
            const Cell target{c.x + dx[a], c.y + dy[a]};
            const bool allowed = target.x >= 0 && target.x < spec.width && target.y >= 0 &&
                                 target.y < spec.height && !spec.blocked.count(target);
            const int next = allowed ? index.at(target) : s;
            mdp.transition(mdp.sa(s, a), next) = 1.0;
            mdp.cost(s, a) =
                !allowed ? spec.c_blocked : (s == world.goal_state ? spec.c_goal : spec.c_allowed);
        }
    }
    mdp.validate();

    // Reachability scan; an unreachable goal means the map is malformed.
    std::vector<char> seen(n, 0);
    std::deque<int> queue{world.start_state};
    seen[world.start_state] = 1;
    while (!queue.empty()) {
        const int s = queue.front();
        queue.pop_front();
        for (int a = 0; a < kGridActions; ++a) {
            for (int t = 0; t < n; ++t) {
                if (mdp.transition(mdp.sa(s, a), t) > 0.0 && !seen[t]) {
                    seen[t] = 1;
                    queue.push_back(t);
                }
            }
        }
    }
    if (!seen[world.goal_state])
        throw UnreachableGoal("gridworld goal is unreachable from the start cell");
    return world;
}

GridSpec parse_map(const std::string& text, double c_goal, double c_allowed, double c_blocked) {
    std::vector<std::string> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.eof()) break;
        rows.push_back(line);
    }
    while (!rows.empty() && rows.back().empty()) rows.pop_back();
    if (rows.empty()) throw MapFormatError("map is empty");

    GridSpec spec;
    spec.height = static_cast<int>(rows.size());
    spec.width = static_cast<int>(rows[0].size());
    spec.c_goal = c_goal;
    spec.c_allowed = c_allowed;
    spec.c_blocked = c_blocked;

    int starts = 0;
    int goals = 0;
    for (int y = 0; y < spec.height; ++y) {
        if (static_cast<int>(rows[y].size()) != spec.width)
            throw MapFormatError("ragged map: row " + std::to_string(y) + " has length " +
                                 std::to_string(rows[y].size()) + ", expected " +
                                 std::to_string(spec.width));
        for (int x = 0; x < spec.width; ++x) {
            switch (rows[y][x]) {
                case '.': break;
                case '#': spec.blocked.insert(Cell{x, y}); break;
                case 'S':
                    spec.start = Cell{x, y};
                    ++starts;
                    break;
                case 'G':
                    spec.goal = Cell{x, y};
                    ++goals;
                    break;
                default:
                    throw MapFormatError(std::string("unknown map character '") + rows[y][x] +
                                         "'");
            }
        }
    }
    if (starts != 1 || goals != 1)
        throw MapFormatError("map must contain exactly one S and one G");
    spec.validate();
    return spec;
}

GridSpec load_map_file(const std::string& path, double c_goal, double c_allowed,
                       double c_blocked) {
    std::ifstream in(path);
    if (!in) throw MapFormatError("cannot open map file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_map(buf.str(), c_goal, c_allowed, c_blocked);
}

namespace {

const std::string kGridWorld1 =
    "S..........\n"
    "...........\n"
    "...........\n"
    "...........\n"
    "....###....\n"
    "....###....\n"
    "....###....\n"
    "...........\n"
    "...........\n"
    "..........G\n";

const std::string kGridWorld2 =
    "S..........\n"
    "..#######..\n"
    "........#..\n"
    "........#..\n"
    "........#..\n"
    "........#..\n"
    "........#..\n"
    "####....#..\n"
    "####.......\n"
    "####......G\n";

const std::string kGridWorld3 =
    "S..........\n"
    "..####..##.\n"
    "...........\n"
    ".##.#####..\n"
    ".##........\n"
    ".##..####..\n"
    ".##.....#..\n"
    "....##..#..\n"
    "..#.##.....\n"
    "..#.##..##G\n";

// 20x20 serpentine layout for larger-scale qualitative runs.
const std::string kLargeGridWorld =
    "S...................\n"
    "....................\n"
    "##################..\n"
    "....................\n"
    "..##################\n"
    "....................\n"
    "##################..\n"
    "....................\n"
    "..##################\n"
    "....................\n"
    "##################..\n"
    "....................\n"
    "..##################\n"
    "....................\n"
    "##################..\n"
    "....................\n"
    "..##################\n"
    "....................\n"
    "##################..\n"
    "...................G\n";

}  // namespace

const std::string& builtin_map(const std::string& name) {
    if (name == "gridworld1") return kGridWorld1;
    if (name == "gridworld2") return kGridWorld2;
    if (name == "gridworld3") return kGridWorld3;
    if (name == "large_gridworld") return kLargeGridWorld;
    throw std::invalid_argument("unknown builtin map: " + name);
}

Trajectory rollout_with_probs(const TabularMDP& mdp, const Mat& probs, int K, StartMode start,
                              Rng& rng) {
    if (K < 1) throw std::invalid_argument("rollout: K must be >= 1");

    int s = 0;
    if (const auto* fixed = std::get_if<StartFixed>(&start)) {
        if (fixed->state < 0 || fixed->state >= mdp.n_states)
            throw std::invalid_argument("rollout: fixed start state out of range");
        s = fixed->state;
    } else if (std::holds_alternative<StartUniform>(start)) {
        s = rng.uniform_int(mdp.n_states);
    } else {
        const Vec d = stationary_of_matrix(policy_transition_matrix(mdp, probs));
        s = rng.categorical(std::span<const double>(d.data(), d.size()));
    }

    Trajectory traj;
    traj.states.reserve(K + 1);
    traj.actions.reserve(K);
    traj.costs.reserve(K);
    traj.states.push_back(s);
    for (int i = 0; i < K; ++i) {
        Vec row = probs.row(s);
        const int a = rng.categorical(std::span<const double>(row.data(), row.size()));
        traj.actions.push_back(a);
        traj.costs.push_back(mdp.cost(s, a));
        const auto trow = mdp.transition.row(mdp.sa(s, a));
        const double u = rng.next_double();
        double acc = 0.0;
        int next = mdp.n_states - 1;
        for (int t = 0; t < mdp.n_states; ++t) {
            acc += trow[t];
            if (u < acc) {
                next = t;
                break;
            }
        }
        s = next;
        traj.states.push_back(s);
    }
    return traj;
}

Trajectory rollout(const TabularMDP& mdp, const SoftmaxPolicy& policy, int K, StartMode start,
                   Rng& rng) {
    return rollout_with_probs(mdp, policy.probs(mdp.n_states, mdp.n_actions), K, start, rng);
}

}  // namespace oir
