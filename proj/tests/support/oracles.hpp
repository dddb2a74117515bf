// Copyright 2026 The regime-router Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace regime::testing {

// Pairwise AUC: a pool item below gold counts 1, a tie counts 1/2.
inline double brute_auc(double gold, std::span<const double> pool) {
    double wins = 0;
    for (double x : pool) {
        if (gold > x) wins += 1.0;
        else if (gold == x) wins += 0.5;
    }
    return wins / static_cast<double>(pool.size());
}

struct BruteKendall {
    std::int64_t s = 0;  // concordant minus discordant
    std::int64_t ties_a = 0;
    std::int64_t ties_b = 0;
    double tau_b = 0;
};

inline BruteKendall brute_kendall(std::span<const double> a, std::span<const double> b) {
    BruteKendall r;
    const auto n = static_cast<std::int64_t>(a.size());
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = i + 1; j < n; ++j) {
            const double da = a[i] - a[j];
            const double db = b[i] - b[j];
            if (da == 0) ++r.ties_a;
            if (db == 0) ++r.ties_b;
            if (da * db > 0) ++r.s;
            if (da * db < 0) --r.s;
        }
    }
    const std::int64_t n0 = n * (n - 1) / 2;
    r.tau_b = static_cast<double>(r.s) /
              std::sqrt(static_cast<double>(n0 - r.ties_a) * static_cast<double>(n0 - r.ties_b));
    return r;
}

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    std::uint64_t c = 1;
    for (std::uint64_t i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
}

// Two-sided exact sign-test p from integer binomial sums; valid for n <= 62.
inline double binomial_two_sided(std::uint64_t wins, std::uint64_t losses) {
    const auto n = wins + losses;
    const auto m = std::min(wins, losses);
    std::uint64_t tail = 0;
    for (std::uint64_t i = 0; i <= m; ++i) tail += binomial(n, i);
    return std::min(1.0, 2.0 * std::ldexp(static_cast<double>(tail), -static_cast<int>(n)));
}

}  // namespace regime::testing
