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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "regime/errors.hpp"
#include "regime/stats.hpp"

namespace regime {
namespace {

TEST(Margin, PopulationStddev) {
    const std::vector<double> pool{0.1, 0.3};
    const auto m = separation_margin(0.5, pool);
    EXPECT_DOUBLE_EQ(m.margin, 0.3);
    EXPECT_DOUBLE_EQ(m.sigma, 0.1);
    EXPECT_FALSE(m.degenerate);
    EXPECT_NEAR(predicted_auc(m), phi(3.0), 1e-12);
}

TEST(Margin, DegeneratePool) {
    const std::vector<double> pool{0.2, 0.2, 0.2};
    const auto m = separation_margin(0.3, pool);
    EXPECT_TRUE(m.degenerate);
    EXPECT_EQ(predicted_auc(m), 1.0);
    EXPECT_EQ(predicted_auc(separation_margin(0.2, pool)), 0.5);
    EXPECT_EQ(predicted_auc(separation_margin(0.1, pool)), 0.0);
    EXPECT_THROW(separation_margin(0.1, std::vector<double>{}), ValidationError);
    EXPECT_THROW(separation_margin(0.1, std::vector<double>{std::nan("")}), ValidationError);
}

TEST(Auc, Examples) {
    EXPECT_EQ(per_query_auc(0.5, std::vector<double>{0.1, 0.2, 0.9, 0.5}), 0.625);
    EXPECT_EQ(per_query_auc(1.0, std::vector<double>{0.1}), 1.0);
    EXPECT_EQ(per_query_auc(0.0, std::vector<double>{0.1}), 0.0);
}

TEST(Auc, MatchesPairwiseBruteForce) {
    std::mt19937_64 rng(42);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = 1 + rng() % 50;
        std::vector<double> pool(n);
        // Coarse grid so ties are common.
        for (auto& v : pool) v = static_cast<double>(rng() % 11) / 10.0;
        const double gold = static_cast<double>(rng() % 11) / 10.0;
        ASSERT_EQ(per_query_auc(gold, pool), testing::brute_auc(gold, pool));
    }
}

TEST(Phi, KnownValues) {
    EXPECT_DOUBLE_EQ(phi(0.0), 0.5);
    EXPECT_NEAR(phi(1.0), 0.8413447460685429, 1e-15);
    EXPECT_NEAR(phi(-1.96), 0.024997895148220435, 1e-15);
    EXPECT_EQ(chi2_survival_df1(0.0), 1.0);
    EXPECT_NEAR(chi2_survival_df1(3.841458820694124), 0.05, 1e-12);
}

TEST(Calibration, PerfectPredictions) {
    std::vector<SeparationMargin> ms;
    std::vector<double> aucs;
    for (int i = 0; i < 10; ++i) {
        ms.push_back({0.05 * (i - 5), 0.1, false});
        aucs.push_back(predicted_auc(ms.back()));
    }
    const auto f = calibration_fit(ms, aucs);
    EXPECT_DOUBLE_EQ(f.r_squared, 1.0);
    EXPECT_DOUBLE_EQ(f.inversion_accuracy, 1.0);
    EXPECT_EQ(f.pairs_compared, 45u);
}

TEST(Calibration, HandComputed) {
    // Predictions phi(1), phi(0), phi(-1) against observed 0.9, 0.4, 0.6.
    const std::vector<SeparationMargin> ms{{0.1, 0.1, false}, {0.0, 0.1, false}, {-0.1, 0.1, false}};
    const std::vector<double> aucs{0.9, 0.4, 0.6};
    const double p1 = phi(1.0), p0 = 0.5, pm = phi(-1.0);
    const double mean = (0.9 + 0.4 + 0.6) / 3.0;
    const double ss_tot = (0.9 - mean) * (0.9 - mean) + (0.4 - mean) * (0.4 - mean) + (0.6 - mean) * (0.6 - mean);
    const double ss_res = (0.9 - p1) * (0.9 - p1) + (0.4 - p0) * (0.4 - p0) + (0.6 - pm) * (0.6 - pm);
    const auto f = calibration_fit(ms, aucs);
    EXPECT_NEAR(f.r_squared, 1.0 - ss_res / ss_tot, 1e-12);
    EXPECT_NEAR(f.inversion_accuracy, 2.0 / 3.0, 1e-15);
}

TEST(Calibration, GlobalSigmaIsRootMeanSquare) {
    const std::vector<SeparationMargin> ms{{0.1, 0.1, false}, {0.2, 0.3, false}, {-0.1, 0.2, false}};
    const std::vector<double> aucs{0.7, 0.8, 0.3};
    const double s = std::sqrt((0.01 + 0.09 + 0.04) / 3.0);
    const std::vector<SeparationMargin> fixed{{0.1, s, false}, {0.2, s, false}, {-0.1, s, false}};
    EXPECT_DOUBLE_EQ(calibration_fit(ms, aucs, SigmaMode::global).r_squared, calibration_fit(fixed, aucs).r_squared);
}

TEST(Calibration, DegenerateAndErrors) {
    const std::vector<SeparationMargin> ms{{0.1, 0.1, false}, {0.2, 0.1, false}, {0.3, 0.1, false}};
    const auto f = calibration_fit(ms, std::vector<double>{0.5, 0.5, 0.5});
    EXPECT_TRUE(f.degenerate);
    EXPECT_EQ(f.r_squared, 0.0);
    EXPECT_THROW(calibration_fit(std::span(ms).first(2), std::vector<double>{0.1, 0.2}), ValidationError);
    EXPECT_THROW(calibration_fit(ms, std::vector<double>{0.1}), ValidationError);
}

TEST(Cantelli, HandComputed) {
    const std::vector<double> aucs{0.95, 0.92, 0.85, 0.99};
    const auto c = cantelli_check(aucs, 0.2, 0.9);
    EXPECT_DOUBLE_EQ(c.empirical, 0.75);
    EXPECT_DOUBLE_EQ(c.bound, 1.0 / (1.0 + 0.16 / 0.04));
    EXPECT_TRUE(c.satisfied);
    const double mu = (0.95 + 0.92 + 0.85 + 0.99) / 4.0;
    EXPECT_DOUBLE_EQ(c.classical_bound, (mu - 0.9) * (mu - 0.9) / (0.04 + (mu - 0.9) * (mu - 0.9)));
    EXPECT_EQ(cantelli_check(aucs, 0.2, 0.99).classical_bound, 0.0);
    EXPECT_THROW(cantelli_check(aucs, 0.0, 0.9), ValidationError);
}

TEST(Kendall, Examples) {
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<double> rev{5, 4, 3, 2, 1};
    EXPECT_EQ(kendall_tau(a, a).tau, 1.0);
    EXPECT_EQ(kendall_tau(a, rev).tau, -1.0);
    const auto k = kendall_tau(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2});
    EXPECT_NEAR(k.tau, 1.0 / 3.0, 1e-15);
    EXPECT_TRUE(kendall_tau(a, std::vector<double>{2, 2, 2, 2, 2}).degenerate);
    EXPECT_THROW(kendall_tau(std::vector<double>{1}, std::vector<double>{1}), ValidationError);
    EXPECT_THROW(kendall_tau(a, std::span<const double>(rev).first(3)), ValidationError);
}

TEST(Kendall, ScipyReference) {
    // scipy.stats.kendalltau([12, 2, 1, 12, 2], [1, 4, 7, 1, 0]) -> tau=-0.47140452079103173, p=0.2827454599327748
    const auto k = kendall_tau(std::vector<double>{12, 2, 1, 12, 2}, std::vector<double>{1, 4, 7, 1, 0});
    EXPECT_NEAR(k.tau, -0.47140452079103173, 1e-14);
    EXPECT_NEAR(k.p_value, 0.2827454599327748, 1e-12);
}

TEST(Kendall, MatchesQuadraticBruteForceWithTies) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> a(30), b(30);
        for (auto& v : a) v = static_cast<double>(rng() % 8);
        for (auto& v : b) v = static_cast<double>(rng() % 8);
        const auto fast = kendall_tau(a, b);
        const auto slow = testing::brute_kendall(a, b);
        ASSERT_EQ(fast.concordant_minus_discordant, slow.s);
        ASSERT_EQ(fast.ties_a, slow.ties_a);
        ASSERT_EQ(fast.ties_b, slow.ties_b);
        ASSERT_EQ(fast.tau, slow.tau_b);
    }
}

TEST(Kendall, SymmetryProperties) {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> a(12), b(12), neg(12);
        for (std::size_t i = 0; i < 12; ++i) {
            a[i] = static_cast<double>(rng() % 5);
            b[i] = static_cast<double>(rng() % 5);
            neg[i] = -b[i];
        }
        const auto ab = kendall_tau(a, b);
        if (ab.degenerate) continue;
        EXPECT_EQ(ab.tau, kendall_tau(b, a).tau);
        EXPECT_EQ(-ab.tau, kendall_tau(a, neg).tau);
        EXPECT_LE(std::abs(ab.tau), 1.0);
    }
}

TEST(McNemar, ExactMatchesIntegerBinomialSums) {
    const auto strong = mcnemar(54, 5);
    EXPECT_LT(strong.p_exact, 1e-9);
    EXPECT_NEAR(strong.p_exact, testing::binomial_two_sided(54, 5), 1e-12 * testing::binomial_two_sided(54, 5));
    const auto mid = mcnemar(22, 6);
    EXPECT_NEAR(mid.p_exact, 2.0 * 499178.0 / std::ldexp(1.0, 28), 1e-15);
    EXPECT_NEAR(mid.statistic, 256.0 / 28.0, 1e-12);
    EXPECT_NEAR(mid.p_chi2, std::erfc(std::sqrt(9.142857 / 2.0)), 1e-3);
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; ++t) {
        const auto w = rng() % 30, l = rng() % 30;
        if (w + l == 0) continue;
        const double oracle = testing::binomial_two_sided(w, l);
        EXPECT_NEAR(mcnemar(w, l).p_exact, oracle, 1e-12 * std::max(oracle, 1e-300)) << w << " " << l;
        EXPECT_EQ(mcnemar(w, l).p_exact, mcnemar(l, w).p_exact);
    }
}

TEST(McNemar, NoDiscordantPairs) {
    const auto r = mcnemar(0, 0);
    EXPECT_TRUE(r.degenerate);
    EXPECT_EQ(r.p_exact, 1.0);
    EXPECT_EQ(r.p_chi2, 1.0);
    EXPECT_EQ(mcnemar(5, 5).p_exact, 1.0);
}

TEST(Kappa, HandComputed) {
    const std::vector<std::string> a{"Q", "Q", "B", "B", "Q", "U"};
    const std::vector<std::string> b{"Q", "B", "B", "B", "Q", "Q"};
    const double p_o = 4.0 / 6.0;
    const double p_e = (3.0 / 6.0) * (3.0 / 6.0) + (2.0 / 6.0) * (3.0 / 6.0);
    EXPECT_NEAR(cohen_kappa(a, b), (p_o - p_e) / (1.0 - p_e), 1e-15);
    EXPECT_EQ(cohen_kappa(a, a), 1.0);
    const std::vector<std::string> same{"Q", "Q"};
    EXPECT_EQ(cohen_kappa(same, same), 1.0);
    EXPECT_THROW(cohen_kappa(a, same), ValidationError);
}

}  // namespace
}  // namespace regime
