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
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace regime {

/// Dense row-major feature matrix.
class FeatureMatrix {
 public:
    explicit FeatureMatrix(std::size_t cols = 0) : cols_(cols) {}

    void add_row(std::span<const double> row);

    std::size_t rows() const noexcept { return cols_ == 0 ? 0 : data_.size() / cols_; }
    std::size_t cols() const noexcept { return cols_; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    /// Rows [begin, end) excluded; used to build training folds.
    FeatureMatrix without_rows(std::size_t begin, std::size_t end) const;

 private:
    std::size_t cols_;
    std::vector<double> data_;
};

struct TrainConfig {
    double l2_penalty = 1.0;
    double tol = 1e-8;   // on the gradient norm
    int max_iter = 200;
};

struct Standardization {
    std::vector<double> mean;
    std::vector<double> stddev;  // population; 1 for constant columns
    std::vector<bool> constant;  // constant columns get weight 0
};

struct TrainMeta {
    std::size_t n = 0;
    std::size_t folds = 1;
    bool deterministic = true;
    TrainConfig config;
    int iterations = 0;
    double gradient_norm = 0;
    std::string solver = "newton";
};

/// Binary logistic regression on internally standardized features:
///   p(x) = sigmoid(bias + sum_j weights[j] * (x[j] - mean[j]) / stddev[j]).
struct LinearModel {
    std::vector<std::string> feature_names;
    std::vector<double> weights;
    double bias = 0;
    Standardization standardization;
    TrainMeta train_meta;

    double decision_value(std::span<const double> x) const;
    double predict_proba(std::span<const double> x) const;

    bool operator==(const LinearModel& other) const;
};

/// Minimizes  -sum_i log-likelihood_i + l2_penalty/2 * ||weights||^2  (bias
/// unpenalized) by full-batch Newton with step halving. Falls back to gradient
/// steps when the Hessian solve is ill-conditioned.
/// Throws TrainingError (single-class labels, bad input) or NonConvergenceError.
LinearModel train(const FeatureMatrix& X, std::span<const int> y, const TrainConfig& cfg = {},
                  std::vector<std::string> feature_names = {});

double predict_proba(const LinearModel& m, std::span<const double> x);

/// Mean log-likelihood of labels under the model (no penalty term).
double log_likelihood(const LinearModel& m, const FeatureMatrix& X, std::span<const int> y);

/// k contiguous [begin, end) ranges over n items in input order; the first n % k
/// ranges are one element longer.
std::vector<std::pair<std::size_t, std::size_t>> contiguous_folds(std::size_t n, std::size_t k);

struct CrossFitResult {
    std::vector<double> out_of_fold_probs;
    std::vector<std::size_t> fold_of;
    std::vector<std::pair<std::size_t, std::size_t>> folds;
    std::vector<LinearModel> fold_models;
    LinearModel full_model;
};

/// Each example's probability comes from the model trained without its fold.
/// No shuffling: folds follow input order.
CrossFitResult cross_fit(const FeatureMatrix& X, std::span<const int> y, std::size_t k = 5,
                         const TrainConfig& cfg = {}, std::vector<std::string> feature_names = {});

inline constexpr const char* kModelVersion = "lm-v1";

nlohmann::json to_json(const LinearModel& m);
LinearModel model_from_json(const nlohmann::json& j);
void save_model(const LinearModel& m, const std::filesystem::path& path);
LinearModel load_model(const std::filesystem::path& path);

}  // namespace regime
