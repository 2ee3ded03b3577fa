// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace oir {

/// Thrown when the policy-induced chain does not admit a unique stationary
/// distribution (the balance system is rank-deficient beyond its one
/// dimensional null space).
struct NonUniqueStationary : std::runtime_error {
    explicit NonUniqueStationary(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when kappa + H(d) falls below the usable range, leaving the
/// information ratio undefined.
struct DegenerateDenominator : std::runtime_error {
    explicit DegenerateDenominator(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when a state occupancy entry underflows to (numerically) zero and a
/// log of it is required.
struct ZeroOccupancy : std::runtime_error {
    explicit ZeroOccupancy(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyTrajectory : std::runtime_error {
    explicit EmptyTrajectory(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown by the gridworld builder when no path from start to goal exists.
struct UnreachableGoal : std::runtime_error {
    explicit UnreachableGoal(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown by the ASCII map loader on malformed input (ragged rows, missing or
/// duplicated markers, unknown characters).
struct MapFormatError : std::runtime_error {
    explicit MapFormatError(const std::string& what) : std::runtime_error(what) {}
};

// The occupancy polytope of a valid MDP is never empty or unbounded, so these
// two indicate broken constraint assembly rather than bad user input.
struct LpInfeasible : std::logic_error {
    explicit LpInfeasible(const std::string& what) : std::logic_error(what) {}
};
struct LpUnbounded : std::logic_error {
    explicit LpUnbounded(const std::string& what) : std::logic_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace oir
