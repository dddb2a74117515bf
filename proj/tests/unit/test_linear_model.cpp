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

#include "regime/errors.hpp"
#include "regime/linear_model.hpp"
#include "synthetic_corpus.hpp"

namespace regime {
namespace {

struct Data {
    FeatureMatrix X;
    std::vector<int> y;
};

// Noisy labels from a fixed linear rule so the optimum is finite.
Data make_data(std::size_t n, std::size_t d, std::uint64_t seed, double label_noise = 0.2) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Data out{FeatureMatrix(d), {}};
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(d);
        double z = 0;
        for (std::size_t j = 0; j < d; ++j) {
            row[j] = g(rng) * (1.0 + static_cast<double>(j));
            z += (j % 2 == 0 ? 1.0 : -0.5) * row[j] / (1.0 + static_cast<double>(j));
        }
        int label = z > 0 ? 1 : 0;
        if (u(rng) < label_noise) label = 1 - label;
        out.X.add_row(row);
        out.y.push_back(label);
    }
    return out;
}

double hand_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Penalized objective in standardized space, recomputed from scratch.
double oracle_objective(const LinearModel& m, const FeatureMatrix& X, std::span<const int> y, double l2,
                        const std::vector<double>& w, double b) {
    double loss = 0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        double z = b;
        for (std::size_t j = 0; j < X.cols(); ++j) {
            if (m.standardization.constant[j]) continue;
            z += w[j] * (X(i, j) - m.standardization.mean[j]) / m.standardization.stddev[j];
        }
        const double p = hand_sigmoid(z);
        loss -= y[i] == 1 ? std::log(p) : std::log(1.0 - p);
    }
    double sq = 0;
    for (double v : w) sq += v * v;
    return loss + 0.5 * l2 * sq;
}

TEST(Train, SeparableDataBothClassesCorrect) {
    FeatureMatrix X(2);
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
        const double x = i < 20 ? -1.0 - i * 0.1 : 1.0 + (i - 20) * 0.1;
        X.add_row(std::vector<double>{x, 0.5 * x});
        y.push_back(i < 20 ? 0 : 1);
    }
    const auto m = train(X, y);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        EXPECT_EQ(m.predict_proba(X.row(i)) > 0.5, y[i] == 1);
    }
    EXPECT_GT(log_likelihood(m, X, y), std::log(0.5));
}

TEST(Train, SingleClassRejected) {
    FeatureMatrix X(1);
    std::vector<int> y{1, 1, 1};
    for (int i = 0; i < 3; ++i) X.add_row(std::vector<double>{static_cast<double>(i)});
    EXPECT_THROW(train(X, y), TrainingError);
}

TEST(Train, BadInputsRejected) {
    FeatureMatrix X(1);
    X.add_row(std::vector<double>{1.0});
    X.add_row(std::vector<double>{2.0});
    EXPECT_THROW(train(X, std::vector<int>{0, 2}), TrainingError);
    EXPECT_THROW(train(X, std::vector<int>{0}), TrainingError);
    EXPECT_THROW(X.add_row(std::vector<double>{1.0, 2.0}), DimensionMismatchError);
    FeatureMatrix bad(1);
    bad.add_row(std::vector<double>{1.0});
    bad.add_row(std::vector<double>{std::nan("")});
    EXPECT_THROW(train(bad, std::vector<int>{0, 1}), NonFiniteValueError);
}

TEST(Train, ObjectiveIsStationaryByFiniteDifferences) {
    const auto data = make_data(200, 3, 5);
    const TrainConfig cfg{.l2_penalty = 0.7, .tol = 1e-10, .max_iter = 200};
    const auto m = train(data.X, data.y, cfg);
    const double h = 1e-5;
    for (std::size_t j = 0; j <= m.weights.size(); ++j) {
        auto wp = m.weights, wm = m.weights;
        double bp = m.bias, bm = m.bias;
        if (j < m.weights.size()) {
            wp[j] += h;
            wm[j] -= h;
        } else {
            bp += h;
            bm -= h;
        }
        const double g = (oracle_objective(m, data.X, data.y, cfg.l2_penalty, wp, bp) -
                          oracle_objective(m, data.X, data.y, cfg.l2_penalty, wm, bm)) /
                         (2 * h);
        EXPECT_NEAR(g, 0.0, 1e-5) << "coordinate " << j;
    }
}

TEST(Train, PerturbedParametersNeverBeatOptimum) {
    const auto data = make_data(150, 2, 8);
    const TrainConfig cfg{.l2_penalty = 1.0};
    const auto m = train(data.X, data.y, cfg);
    const double best = oracle_objective(m, data.X, data.y, cfg.l2_penalty, m.weights, m.bias);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 0.1);
    for (int t = 0; t < 50; ++t) {
        auto w = m.weights;
        for (auto& v : w) v += g(rng);
        EXPECT_GE(oracle_objective(m, data.X, data.y, cfg.l2_penalty, w, m.bias + g(rng)), best - 1e-9);
    }
}

TEST(Predict, MatchesHandSigmoid) {
    LinearModel m;
    m.feature_names = {"a", "b"};
    m.weights = {0.5, -1.0};
    m.bias = 0.25;
    m.standardization = {{1.0, 0.0}, {2.0, 1.0}, {false, false}};
    const std::vector<double> x{3.0, 0.5};
    EXPECT_DOUBLE_EQ(m.predict_proba(x), hand_sigmoid(0.25 + 0.5 * (3.0 - 1.0) / 2.0 - 1.0 * 0.5));
    EXPECT_THROW(m.predict_proba(std::vector<double>{1.0}), DimensionMismatchError);
    EXPECT_NEAR(predict_proba(m, std::vector<double>{1.0e6, -1.0e6}), 1.0, 1e-12);
}

TEST(Train, ConstantColumnGetsZeroWeight) {
    auto data = make_data(80, 2, 4);
    FeatureMatrix X(3);
    for (std::size_t i = 0; i < data.X.rows(); ++i) {
        X.add_row(std::vector<double>{data.X(i, 0), 4.0, data.X(i, 1)});
    }
    const auto m = train(X, data.y);
    EXPECT_TRUE(m.standardization.constant[1]);
    EXPECT_EQ(m.weights[1], 0.0);
}

TEST(Train, AffineFeatureRescalingLeavesPredictionsUnchanged) {
    const auto data = make_data(120, 3, 21);
    FeatureMatrix scaled(3);
    for (std::size_t i = 0; i < data.X.rows(); ++i) {
        scaled.add_row(std::vector<double>{data.X(i, 0) * 7.0 + 3.0, data.X(i, 1) * 0.01 - 2.0, data.X(i, 2)});
    }
    const TrainConfig cfg{.tol = 1e-12};
    const auto a = train(data.X, data.y, cfg);
    const auto b = train(scaled, data.y, cfg);
    for (std::size_t i = 0; i < data.X.rows(); ++i) {
        EXPECT_NEAR(a.predict_proba(data.X.row(i)), b.predict_proba(scaled.row(i)), 1e-8);
    }
}

TEST(Train, Deterministic) {
    const auto data = make_data(300, 5, 13);
    const auto a = train(data.X, data.y);
    const auto b = train(data.X, data.y);
    EXPECT_TRUE(a == b);
}

TEST(Train, LikelihoodAtLeastInterceptOnlyModel) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto data = make_data(100, 2, seed, 0.45);
        const auto m = train(data.X, data.y, {.l2_penalty = 0.0});
        double pos = 0;
        for (int v : data.y) pos += v;
        const double p = pos / static_cast<double>(data.y.size());
        const double base = p * std::log(p) + (1 - p) * std::log(1 - p);
        EXPECT_GE(log_likelihood(m, data.X, data.y), base - 1e-9);
    }
}

TEST(Folds, ContiguousTen) {
    const auto f = contiguous_folds(10, 5);
    ASSERT_EQ(f.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(f[i].first, 2 * i);
        EXPECT_EQ(f[i].second, 2 * i + 2);
    }
}

TEST(Folds, ContiguousEightEightyOne) {
    const auto f = contiguous_folds(881, 5);
    const std::vector<std::size_t> expected{177, 176, 176, 176, 176};
    std::size_t begin = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(f[i].first, begin);
        EXPECT_EQ(f[i].second - f[i].first, expected[i]);
        begin = f[i].second;
    }
    EXPECT_EQ(begin, 881u);
    EXPECT_THROW(contiguous_folds(3, 5), ValidationError);
    EXPECT_THROW(contiguous_folds(3, 0), ValidationError);
}

TEST(Folds, PropertyPartitionAndBalance) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 200; ++t) {
        const std::size_t k = 1 + rng() % 10;
        const std::size_t n = k + rng() % 1000;
        const auto f = contiguous_folds(n, k);
        std::size_t begin = 0, lo = n, hi = 0;
        for (const auto& [b, e] : f) {
            ASSERT_EQ(b, begin);
            lo = std::min(lo, e - b);
            hi = std::max(hi, e - b);
            begin = e;
        }
        EXPECT_EQ(begin, n);
        EXPECT_LE(hi - lo, 1u);
    }
}

TEST(CrossFit, PoisoningOneFoldOnlyMovesThatFold) {
    const auto data = make_data(881, 3, 2);
    const auto base = cross_fit(data.X, data.y, 5);
    for (std::size_t f = 0; f < 5; ++f) {
        auto poisoned = data.y;
        const auto [begin, end] = base.folds[f];
        for (std::size_t i = begin; i < end; ++i) poisoned[i] = 1 - poisoned[i];
        const auto other = cross_fit(data.X, poisoned, 5);
        for (std::size_t i = 0; i < data.y.size(); ++i) {
            if (i >= begin && i < end) {
                EXPECT_EQ(other.out_of_fold_probs[i], base.out_of_fold_probs[i]);
            }
        }
        bool any_changed = false;
        for (std::size_t i = 0; i < data.y.size(); ++i) {
            if (i < begin || i >= end) any_changed |= other.out_of_fold_probs[i] != base.out_of_fold_probs[i];
        }
        EXPECT_TRUE(any_changed);
    }
}

TEST(CrossFit, OutOfFoldUsesHeldOutModel) {
    const auto data = make_data(100, 2, 9);
    const auto r = cross_fit(data.X, data.y, 4);
    for (std::size_t i = 0; i < 100; ++i) {
        EXPECT_EQ(r.fold_of[i], i / 25);
        EXPECT_EQ(r.out_of_fold_probs[i], r.fold_models[r.fold_of[i]].predict_proba(data.X.row(i)));
    }
    EXPECT_TRUE(r.full_model == train(data.X, data.y));
}

TEST(Artifact, RoundTrip) {
    const auto data = make_data(90, 4, 6);
    const auto m = train(data.X, data.y, {}, {"a", "b", "c", "d"});
    const auto dir = testing::make_temp_dir("lm");
    save_model(m, dir / "m.json");
    const auto back = load_model(dir / "m.json");
    EXPECT_TRUE(back == m);
    for (std::size_t i = 0; i < data.X.rows(); ++i) {
        EXPECT_EQ(back.predict_proba(data.X.row(i)), m.predict_proba(data.X.row(i)));
    }
    auto j = to_json(m);
    j["version"] = "lm-v0";
    EXPECT_THROW(model_from_json(j), FormatError);
    EXPECT_THROW(load_model(dir / "absent.json"), FormatError);
}

}  // namespace
}  // namespace regime
