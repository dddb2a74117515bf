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

#include "regime/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "regime/errors.hpp"

namespace regime {

namespace {

void check_pool(std::span<const double> pool) {
    if (pool.empty()) throw ValidationError("pool scores are empty");
    for (double v : pool) {
        if (!std::isfinite(v)) throw ValidationError("pool scores contain a non-finite value");
    }
}

// Sum over groups of equal adjacent values in a sorted sequence.
template <typename Eq, typename Fn>
void for_each_tie_group(std::size_t n, Eq&& equal, Fn&& fn) {
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && equal(i, j)) ++j;
        fn(static_cast<std::int64_t>(j - i));
        i = j;
    }
}

// Counts pairs i < j with v[i] > v[j] while stably merge-sorting v.
std::int64_t count_inversions(std::vector<double>& v) {
    std::vector<double> buf(v.size());
    std::int64_t swaps = 0;
    for (std::size_t width = 1; width < v.size(); width *= 2) {
        for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
            const std::size_t mid = std::min(lo + width, v.size());
            const std::size_t hi = std::min(lo + 2 * width, v.size());
            std::size_t i = lo, j = mid, k = lo;
            while (i < mid && j < hi) {
                if (v[j] < v[i]) {
                    swaps += static_cast<std::int64_t>(mid - i);
                    buf[k++] = v[j++];
                } else {
                    buf[k++] = v[i++];
                }
            }
            while (i < mid) buf[k++] = v[i++];
            while (j < hi) buf[k++] = v[j++];
        }
        std::copy(buf.begin(), buf.end(), v.begin());
    }
    return swaps;
}

}  // namespace

SeparationMargin separation_margin(double gold_score, std::span<const double> pool_scores) {
    check_pool(pool_scores);
    if (!std::isfinite(gold_score)) throw ValidationError("gold score is not finite");
    const double n = static_cast<double>(pool_scores.size());
    const auto [lo, hi] = std::minmax_element(pool_scores.begin(), pool_scores.end());
    if (*lo == *hi) return {gold_score - *lo, 0.0, true};
    const double mean = std::accumulate(pool_scores.begin(), pool_scores.end(), 0.0) / n;
    double ss = 0;
    for (double v : pool_scores) ss += (v - mean) * (v - mean);
    SeparationMargin m;
    m.margin = gold_score - mean;
    m.sigma = std::sqrt(ss / n);
    m.degenerate = m.sigma == 0.0;
    return m;
}

double per_query_auc(double gold_score, std::span<const double> pool_scores) {
    check_pool(pool_scores);
    std::vector<double> sorted(pool_scores.begin(), pool_scores.end());
    std::sort(sorted.begin(), sorted.end());
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), gold_score) - sorted.begin();
    const auto not_above = std::upper_bound(sorted.begin(), sorted.end(), gold_score) - sorted.begin();
    const double tied = static_cast<double>(not_above - below);
    return (static_cast<double>(below) + 0.5 * tied) / static_cast<double>(sorted.size());
}

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double chi2_survival_df1(double x) {
    if (x <= 0) return 1.0;
    return std::erfc(std::sqrt(x / 2.0));
}

double predicted_auc(const SeparationMargin& m) {
    if (m.sigma > 0) return phi(m.margin / m.sigma);
    return m.margin > 0 ? 1.0 : (m.margin < 0 ? 0.0 : 0.5);
}

CalibrationFit calibration_fit(std::span<const SeparationMargin> margins, std::span<const double> aucs,
                               SigmaMode mode) {
    if (margins.size() != aucs.size()) throw ValidationError("margins and AUCs differ in length");
    const std::size_t n = margins.size();
    if (n < 3) throw ValidationError("calibration fit needs at least 3 queries");

    double global_sigma = 0;
    if (mode == SigmaMode::global) {
        for (const auto& m : margins) global_sigma += m.sigma * m.sigma;
        global_sigma = std::sqrt(global_sigma / static_cast<double>(n));
    }
    std::vector<double> predicted(n);
    for (std::size_t i = 0; i < n; ++i) {
        SeparationMargin m = margins[i];
        if (mode == SigmaMode::global) m.sigma = global_sigma;
        predicted[i] = predicted_auc(m);
    }

    CalibrationFit fit;
    fit.n = n;
    const double mean = std::accumulate(aucs.begin(), aucs.end(), 0.0) / static_cast<double>(n);
    double ss_tot = 0, ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ss_tot += (aucs[i] - mean) * (aucs[i] - mean);
        ss_res += (aucs[i] - predicted[i]) * (aucs[i] - predicted[i]);
    }
    if (ss_tot == 0) {
        fit.degenerate = true;
        fit.r_squared = ss_res == 0 ? 1.0 : 0.0;
    } else {
        fit.r_squared = 1.0 - ss_res / ss_tot;
    }

    std::size_t agree = 0, compared = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dp = predicted[i] - predicted[j];
            const double da = aucs[i] - aucs[j];
            if (dp == 0 || da == 0) continue;
            ++compared;
            if ((dp > 0) == (da > 0)) ++agree;
        }
    }
    fit.pairs_compared = compared;
    fit.inversion_accuracy = compared ? static_cast<double>(agree) / static_cast<double>(compared) : 0.0;
    return fit;
}

CantelliResult cantelli_check(std::span<const double> aucs, double sigma, double t) {
    if (!(sigma > 0)) throw ValidationError("Cantelli check needs sigma > 0");
    if (aucs.empty()) throw ValidationError("Cantelli check needs at least one AUC");
    CantelliResult r;
    const auto above = std::count_if(aucs.begin(), aucs.end(), [t](double a) { return a > t; });
    r.empirical = static_cast<double>(above) / static_cast<double>(aucs.size());
    r.bound = 1.0 / (1.0 + (t - 0.5) * (t - 0.5) / (sigma * sigma));
    r.satisfied = r.empirical >= r.bound;
    const double mu = std::accumulate(aucs.begin(), aucs.end(), 0.0) / static_cast<double>(aucs.size());
    if (t < mu) {
        const double gap = mu - t;
        r.classical_bound = gap * gap / (sigma * sigma + gap * gap);
    }
    return r;
}

KendallResult kendall_tau(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("Kendall tau inputs differ in length");
    const std::size_t n = a.size();
    if (n < 2) throw ValidationError("Kendall tau needs at least two observations");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (a[i] != a[j]) return a[i] < a[j];
        return b[i] < b[j];
    });

    KendallResult r;
    const auto nn = static_cast<std::int64_t>(n);
    const std::int64_t n0 = nn * (nn - 1) / 2;
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    for_each_tie_group(
        n, [&](std::size_t i, std::size_t j) { return a[order[i]] == a[order[j]]; },
        [&](std::int64_t t) {
            r.ties_a += t * (t - 1) / 2;
            x0 += static_cast<double>(t * (t - 1) * (t - 2));
            x1 += static_cast<double>(t * (t - 1) * (2 * t + 5));
        });
    for_each_tie_group(
        n,
        [&](std::size_t i, std::size_t j) { return a[order[i]] == a[order[j]] && b[order[i]] == b[order[j]]; },
        [&](std::int64_t t) { r.ties_both += t * (t - 1) / 2; });

    std::vector<double> bs(n);
    for (std::size_t i = 0; i < n; ++i) bs[i] = b[order[i]];
    const std::int64_t swaps = count_inversions(bs);
    for_each_tie_group(
        n, [&](std::size_t i, std::size_t j) { return bs[i] == bs[j]; },
        [&](std::int64_t t) {
            r.ties_b += t * (t - 1) / 2;
            y0 += static_cast<double>(t * (t - 1) * (t - 2));
            y1 += static_cast<double>(t * (t - 1) * (2 * t + 5));
        });

    r.concordant_minus_discordant = n0 - r.ties_a - r.ties_b + r.ties_both - 2 * swaps;
    const auto denom_a = n0 - r.ties_a;
    const auto denom_b = n0 - r.ties_b;
    if (denom_a == 0 || denom_b == 0) {
        r.degenerate = true;
        r.tau = 0;
        r.p_value = 1;
        return r;
    }
    r.tau = static_cast<double>(r.concordant_minus_discordant) /
            std::sqrt(static_cast<double>(denom_a) * static_cast<double>(denom_b));

    const double m = static_cast<double>(nn) * static_cast<double>(nn - 1);
    double var = (m * (2.0 * static_cast<double>(nn) + 5.0) - x1 - y1) / 18.0 +
                 2.0 * static_cast<double>(r.ties_a) * static_cast<double>(r.ties_b) / m;
    if (n > 2) var += x0 * y0 / (9.0 * m * static_cast<double>(nn - 2));
    if (var > 0) {
        r.z = static_cast<double>(r.concordant_minus_discordant) / std::sqrt(var);
        r.p_value = std::erfc(std::abs(r.z) / std::sqrt(2.0));
    }
    return r;
}

McNemarResult mcnemar(std::size_t wins, std::size_t losses) {
    McNemarResult r;
    r.wins = wins;
    r.losses = losses;
    const std::size_t n = wins + losses;
    if (n == 0) {
        r.degenerate = true;
        return r;
    }
    const double diff = static_cast<double>(wins) - static_cast<double>(losses);
    r.statistic = diff * diff / static_cast<double>(n);
    r.p_chi2 = chi2_survival_df1(r.statistic);

    // P(X <= m) for X ~ Binomial(n, 1/2). Small n: term recurrence in extended
    // precision, exact to the last bit of a double in practice. Large n: log space.
    const std::size_t m = std::min(wins, losses);
    double tail = 0;
    if (n <= 1000) {
        long double term = 1, sum = 1;
        for (std::size_t i = 1; i <= m; ++i) {
            term = term * static_cast<long double>(n - i + 1) / static_cast<long double>(i);
            sum += term;
        }
        tail = static_cast<double>(std::ldexp(sum, -static_cast<int>(n)));
    } else {
        const double log_half_n = static_cast<double>(n) * std::log(0.5);
        const double lg_n1 = std::lgamma(static_cast<double>(n) + 1.0);
        double max_log = -INFINITY;
        std::vector<double> logs;
        logs.reserve(m + 1);
        for (std::size_t i = 0; i <= m; ++i) {
            const double l = lg_n1 - std::lgamma(static_cast<double>(i) + 1.0) -
                             std::lgamma(static_cast<double>(n - i) + 1.0) + log_half_n;
            logs.push_back(l);
            max_log = std::max(max_log, l);
        }
        double s = 0;
        for (double l : logs) s += std::exp(l - max_log);
        tail = std::exp(max_log) * s;
    }
    r.p_exact = std::min(1.0, 2.0 * tail);
    return r;
}

double cohen_kappa(std::span<const std::string> rater_a, std::span<const std::string> rater_b) {
    if (rater_a.size() != rater_b.size()) throw ValidationError("rater label lists differ in length");
    if (rater_a.empty()) throw ValidationError("kappa needs at least one item");
    const double n = static_cast<double>(rater_a.size());
    std::map<std::string, double> count_a, count_b;
    double agree = 0;
    for (std::size_t i = 0; i < rater_a.size(); ++i) {
        count_a[rater_a[i]] += 1;
        count_b[rater_b[i]] += 1;
        if (rater_a[i] == rater_b[i]) agree += 1;
    }
    const double p_o = agree / n;
    double p_e = 0;
    for (const auto& [label, ca] : count_a) {
        auto it = count_b.find(label);
        if (it != count_b.end()) p_e += (ca / n) * (it->second / n);
    }
    if (p_e >= 1.0) return p_o >= 1.0 ? 1.0 : 0.0;
    return (p_o - p_e) / (1.0 - p_e);
}

nlohmann::json to_json(const CalibrationFit& f) {
    return {{"r_squared", f.r_squared},
            {"inversion_accuracy", f.inversion_accuracy},
            {"n", f.n},
            {"pairs_compared", f.pairs_compared},
            {"degenerate", f.degenerate}};
}

nlohmann::json to_json(const CantelliResult& c) {
    return {{"empirical", c.empirical},
            {"bound", c.bound},
            {"satisfied", c.satisfied},
            {"classical_bound", c.classical_bound}};
}

nlohmann::json to_json(const KendallResult& k) {
    return {{"tau", k.tau}, {"z", k.z}, {"p_value", k.p_value}, {"degenerate", k.degenerate}};
}

nlohmann::json to_json(const McNemarResult& m) {
    return {{"wins", m.wins},         {"losses", m.losses},     {"statistic", m.statistic},
            {"p_exact", m.p_exact},   {"p_chi2", m.p_chi2},     {"degenerate", m.degenerate}};
}

}  // namespace regime
