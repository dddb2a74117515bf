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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace regime {

struct SeparationMargin {
    double margin = 0;  // gold score minus pool mean
    double sigma = 0;   // population stddev of pool scores
    bool degenerate = false;  // sigma == 0
};

/// Throws ValidationError on an empty or non-finite pool.
SeparationMargin separation_margin(double gold_score, std::span<const double> pool_scores);

/// Fraction of pool scores strictly below gold plus half the fraction tied.
double per_query_auc(double gold_score, std::span<const double> pool_scores);

/// Standard normal CDF.
double phi(double z);

/// Survival function of the chi-square distribution with one degree of freedom.
double chi2_survival_df1(double x);

/// Predicted AUC of a margin: phi(margin / sigma); a degenerate pool maps to 1, 0.5 or 0 by sign.
double predicted_auc(const SeparationMargin& m);

enum class SigmaMode { per_query, global };

struct CalibrationFit {
    double r_squared = 0;
    double inversion_accuracy = 0;
    std::size_t n = 0;
    std::size_t pairs_compared = 0;
    bool degenerate = false;  // all observed AUCs equal
};

/// Fits phi(S_i / sigma_i) to observed AUCs. inversion_accuracy is the fraction
/// of query pairs whose predicted and observed AUC differences share a sign,
/// over pairs where both differences are non-zero. In global mode every sigma is
/// replaced by the root-mean-square of the per-query sigmas.
CalibrationFit calibration_fit(std::span<const SeparationMargin> margins, std::span<const double> aucs,
                               SigmaMode mode = SigmaMode::per_query);

struct CantelliResult {
    double empirical = 0;   // fraction of aucs > t
    double bound = 0;       // 1 / (1 + (t - 0.5)^2 / sigma^2)
    bool satisfied = false; // empirical >= bound
    double classical_bound = 0;  // one-sided Cantelli lower bound around the empirical mean
};

CantelliResult cantelli_check(std::span<const double> aucs, double sigma, double t);

struct KendallResult {
    double tau = 0;      // tau-b
    double z = 0;
    double p_value = 1;  // two-sided, normal approximation with tie-corrected variance
    std::int64_t concordant_minus_discordant = 0;
    std::int64_t ties_a = 0;  // tied pairs in a
    std::int64_t ties_b = 0;
    std::int64_t ties_both = 0;
    bool degenerate = false;  // one input is constant
};

/// Kendall tau-b in O(n log n). Throws ValidationError on length mismatch or n < 2.
KendallResult kendall_tau(std::span<const double> a, std::span<const double> b);

struct McNemarResult {
    std::size_t wins = 0;
    std::size_t losses = 0;
    double statistic = 0;  // (w - l)^2 / (w + l)
    double p_exact = 1;    // two-sided exact binomial
    double p_chi2 = 1;
    bool degenerate = false;  // no discordant pairs
};

McNemarResult mcnemar(std::size_t wins, std::size_t losses);

/// Cohen's kappa for two raters over the same items. When chance agreement is 1
/// the result is 1 for full agreement and 0 otherwise.
double cohen_kappa(std::span<const std::string> rater_a, std::span<const std::string> rater_b);

nlohmann::json to_json(const CalibrationFit& f);
nlohmann::json to_json(const CantelliResult& c);
nlohmann::json to_json(const KendallResult& k);
nlohmann::json to_json(const McNemarResult& m);

}  // namespace regime
