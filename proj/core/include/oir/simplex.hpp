// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "oir/mdp.hpp"

namespace oir {

/// Outcome of a standard-form linear program min c^T x, A x = b, x >= 0.
struct LpResult {
    enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };
    Status status = Status::Optimal;
    Vec x;
    double objective = 0.0;
    long iterations = 0;
};

/// Dense two-phase primal simplex with Bland's rule (anti-cycling).
/// Redundant equality rows are detected in phase one and dropped.
LpResult simplex_solve(const Mat& A, const Vec& b, const Vec& c, long max_iterations = 1000000);

}  // namespace oir
