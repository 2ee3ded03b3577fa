// Copyright 2026 The OIR Workbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace oir {

/// Seeded generator with hand-rolled draws. std::mt19937_64 output is pinned
/// by the standard, but the distribution adapters are not; sampling directly
/// from the raw stream keeps runs byte-reproducible across toolchains.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform draw in [0, 1) with 53 bits of mantissa.
    double next_double() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Index draw from an unnormalized weight vector via CDF scan.
    int categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = next_double() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    /// Uniform integer in [0, n).
    int uniform_int(int n) { return static_cast<int>(next_double() * n); }

    /// Uniform real in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  private:
    std::mt19937_64 gen_;
};

}  // namespace oir
