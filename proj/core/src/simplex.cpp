// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "oir/simplex.hpp"

#include <vector>

namespace oir {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kReducedCostTol = 1e-9;
constexpr double kFeasTol = 1e-8;

struct Tableau {
    Mat A;                   // m x n, kept equal to B^{-1} A_orig
    Vec b;                   // m, kept equal to B^{-1} b_orig >= 0
    std::vector<int> basis;  // size m, column index basic in each row

    void pivot(int row, int col) {
        const double piv = A(row, col);
        A.row(row) /= piv;
        b[row] /= piv;
        for (int i = 0; i < A.rows(); ++i) {
            if (i == row) continue;
            const double factor = A(i, col);
            if (factor == 0.0) continue;
            A.row(i) -= factor * A.row(row);
            b[i] -= factor * b[row];
        }
        basis[static_cast<std::size_t>(row)] = col;
    }
};

/// Bland's rule iteration on the tableau for objective `c` restricted to
/// columns < n_price. Returns Optimal/Unbounded/IterationLimit.
LpResult::Status run_simplex(Tableau& t, const Vec& c, int n_price, long max_iterations,
                             long& iterations) {
    const int m = static_cast<int>(t.A.rows());
    while (iterations < max_iterations) {
        // Reduced costs z_j = c_j - c_B^T A_j over priced columns.
        Vec cb(m);
        for (int i = 0; i < m; ++i) cb[i] = c[t.basis[static_cast<std::size_t>(i)]];
        int entering = -1;
        for (int j = 0; j < n_price; ++j) {
            const double reduced = c[j] - cb.dot(t.A.col(j));
            if (reduced < -kReducedCostTol) {
                entering = j;  // Bland: smallest index
                break;
            }
        }
        if (entering < 0) return LpResult::Status::Optimal;

        int leaving_row = -1;
        double best_ratio = 0.0;
        for (int i = 0; i < m; ++i) {
            if (t.A(i, entering) > kPivotTol) {
                const double ratio = t.b[i] / t.A(i, entering);
                if (leaving_row < 0 || ratio < best_ratio - 1e-15 ||
                    (std::abs(ratio - best_ratio) <= 1e-15 &&
                     t.basis[static_cast<std::size_t>(i)] <
                         t.basis[static_cast<std::size_t>(leaving_row)])) {
                    leaving_row = i;
                    best_ratio = ratio;
                }
            }
        }
        if (leaving_row < 0) return LpResult::Status::Unbounded;
        t.pivot(leaving_row, entering);
        ++iterations;
    }
    return LpResult::Status::IterationLimit;
}

}  // namespace

LpResult simplex_solve(const Mat& A_in, const Vec& b_in, const Vec& c, long max_iterations) {
    const int m = static_cast<int>(A_in.rows());
    const int n = static_cast<int>(A_in.cols());

    Tableau t;
    t.A = Mat(m, n + m);
    t.A.leftCols(n) = A_in;
    t.A.rightCols(m) = Mat::Identity(m, m);
    t.b = b_in;
    for (int i = 0; i < m; ++i) {
        if (t.b[i] < 0.0) {
            t.b[i] = -t.b[i];
            t.A.row(i) = -t.A.row(i);
            t.A(i, n + i) = 1.0;  // keep the artificial's own column positive
        }
    }
    t.basis.resize(m);
    for (int i = 0; i < m; ++i) t.basis[static_cast<std::size_t>(i)] = n + i;

    LpResult result;

    // Phase 1: minimize the sum of artificials over all columns.
    Vec phase1_cost = Vec::Zero(n + m);
    phase1_cost.tail(m).setOnes();
    auto status = run_simplex(t, phase1_cost, n + m, max_iterations, result.iterations);
    if (status != LpResult::Status::Optimal) {
        result.status = status;
        return result;
    }
    double artificial_sum = 0.0;
    for (int i = 0; i < m; ++i)
        if (t.basis[static_cast<std::size_t>(i)] >= n) artificial_sum += t.b[i];
    if (artificial_sum > kFeasTol) {
        result.status = LpResult::Status::Infeasible;
        return result;
    }

    // Pivot artificials out of the basis; rows that cannot pivot are
    // redundant equalities and get dropped.
    std::vector<int> keep_rows;
    for (int i = 0; i < m; ++i) {
        if (t.basis[static_cast<std::size_t>(i)] < n) {
            keep_rows.push_back(i);
            continue;
        }
        int col = -1;
        for (int j = 0; j < n; ++j) {
            if (std::abs(t.A(i, j)) > 1e-9) {
                col = j;
                break;
            }
        }
        if (col >= 0) {
            t.pivot(i, col);
            keep_rows.push_back(i);
        }
        // else: redundant row, dropped below
    }
    if (static_cast<int>(keep_rows.size()) < m) {
        Mat A2(static_cast<int>(keep_rows.size()), n + m);
        Vec b2(static_cast<int>(keep_rows.size()));
        std::vector<int> basis2;
        for (std::size_t k = 0; k < keep_rows.size(); ++k) {
            A2.row(static_cast<int>(k)) = t.A.row(keep_rows[k]);
            b2[static_cast<int>(k)] = t.b[keep_rows[k]];
            basis2.push_back(t.basis[static_cast<std::size_t>(keep_rows[k])]);
        }
        t.A = std::move(A2);
        t.b = std::move(b2);
        t.basis = std::move(basis2);
    }

    // Phase 2: original objective; artificial columns are barred from
    // entering by pricing only the first n columns.
    Vec phase2_cost = Vec::Zero(n + m);
    phase2_cost.head(n) = c;
    status = run_simplex(t, phase2_cost, n, max_iterations, result.iterations);
    result.status = status;
    if (status != LpResult::Status::Optimal) return result;

    result.x = Vec::Zero(n);
    for (std::size_t i = 0; i < t.basis.size(); ++i)
        if (t.basis[i] < n) result.x[t.basis[i]] = t.b[static_cast<int>(i)];
    result.objective = c.dot(result.x);
    return result;
}

}  // namespace oir
