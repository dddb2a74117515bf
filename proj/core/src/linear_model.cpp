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

#include "regime/linear_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>

#include "regime/errors.hpp"

namespace regime {

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_finite(std::span<const double> x) {
    for (double v : x) {
        if (!std::isfinite(v)) throw NonFiniteValueError("feature vector contains a non-finite value");
    }
}

struct Problem {
    Eigen::MatrixXd Z;  // standardized active columns
    Eigen::VectorXd y;
    double l2;
};

double objective(const Problem& p, const Eigen::VectorXd& w, double b) {
    Eigen::VectorXd z = (p.Z * w).array() + b;
    double loss = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) loss += softplus(z[i]) - p.y[i] * z[i];
    return loss + 0.5 * p.l2 * w.squaredNorm();
}

}  // namespace

void FeatureMatrix::add_row(std::span<const double> row) {
    if (row.size() != cols_) {
        throw DimensionMismatchError("row has " + std::to_string(row.size()) + " features, expected " +
                                     std::to_string(cols_));
    }
    data_.insert(data_.end(), row.begin(), row.end());
}

FeatureMatrix FeatureMatrix::without_rows(std::size_t begin, std::size_t end) const {
    FeatureMatrix out(cols_);
    for (std::size_t i = 0; i < rows(); ++i) {
        if (i < begin || i >= end) out.add_row(row(i));
    }
    return out;
}

double LinearModel::decision_value(std::span<const double> x) const {
    if (x.size() != weights.size()) {
        throw DimensionMismatchError("model expects " + std::to_string(weights.size()) + " features, got " +
                                     std::to_string(x.size()));
    }
    check_finite(x);
    double z = bias;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (standardization.constant[j]) continue;
        z += weights[j] * (x[j] - standardization.mean[j]) / standardization.stddev[j];
    }
    return z;
}

double LinearModel::predict_proba(std::span<const double> x) const { return sigmoid(decision_value(x)); }

bool LinearModel::operator==(const LinearModel& o) const {
    return feature_names == o.feature_names && weights == o.weights && bias == o.bias &&
           standardization.mean == o.standardization.mean && standardization.stddev == o.standardization.stddev &&
           standardization.constant == o.standardization.constant;
}

double predict_proba(const LinearModel& m, std::span<const double> x) { return m.predict_proba(x); }

LinearModel train(const FeatureMatrix& X, std::span<const int> y, const TrainConfig& cfg,
                  std::vector<std::string> feature_names) {
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();
    if (n != y.size()) throw TrainingError("feature rows and labels differ in length");
    if (n == 0) throw TrainingError("no training examples");
    if (cfg.l2_penalty < 0 || cfg.tol <= 0 || cfg.max_iter <= 0) throw TrainingError("invalid training config");
    if (feature_names.empty()) {
        for (std::size_t j = 0; j < d; ++j) feature_names.push_back("x" + std::to_string(j));
    }
    if (feature_names.size() != d) throw TrainingError("feature_names length does not match feature count");

    std::size_t positives = 0;
    for (int label : y) {
        if (label != 0 && label != 1) throw TrainingError("labels must be 0 or 1");
        positives += static_cast<std::size_t>(label);
    }
    if (positives == 0 || positives == n) throw TrainingError("training labels contain a single class");
    for (std::size_t i = 0; i < n; ++i) check_finite(X.row(i));

    LinearModel m;
    m.feature_names = std::move(feature_names);
    m.weights.assign(d, 0.0);
    m.standardization.mean.assign(d, 0.0);
    m.standardization.stddev.assign(d, 1.0);
    m.standardization.constant.assign(d, false);

    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0;
        for (std::size_t i = 0; i < n; ++i) mean += X(i, j);
        mean /= static_cast<double>(n);
        double var = 0;
        for (std::size_t i = 0; i < n; ++i) var += (X(i, j) - mean) * (X(i, j) - mean);
        const double sd = std::sqrt(var / static_cast<double>(n));
        m.standardization.mean[j] = mean;
        if (sd > 1e-12 * std::max(1.0, std::abs(mean))) {
            m.standardization.stddev[j] = sd;
            active.push_back(j);
        } else {
            m.standardization.constant[j] = true;
        }
    }

    Problem prob;
    prob.l2 = cfg.l2_penalty;
    prob.Z.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(active.size()));
    prob.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        prob.y[static_cast<Eigen::Index>(i)] = y[i];
        for (std::size_t a = 0; a < active.size(); ++a) {
            const auto j = active[a];
            prob.Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) =
                (X(i, j) - m.standardization.mean[j]) / m.standardization.stddev[j];
        }
    }

    const auto k = static_cast<Eigen::Index>(active.size());
    Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
    double b = 0;
    double f = objective(prob, w, b);
    double gnorm = 0;
    bool used_gradient = false;
    int iter = 0;
    for (;; ++iter) {
        Eigen::VectorXd z = (prob.Z * w).array() + b;
        Eigen::VectorXd p = z.unaryExpr([](double v) { return sigmoid(v); });
        Eigen::VectorXd r = p - prob.y;
        Eigen::VectorXd grad(k + 1);
        grad.head(k) = prob.Z.transpose() * r + prob.l2 * w;
        grad[k] = r.sum();
        gnorm = grad.norm();
        if (gnorm <= cfg.tol) break;
        if (iter >= cfg.max_iter) throw NonConvergenceError(iter, gnorm);

        Eigen::VectorXd s = (p.array() * (1.0 - p.array())).matrix();
        Eigen::MatrixXd H(k + 1, k + 1);
        Eigen::MatrixXd Zs = prob.Z.array().colwise() * s.array();
        H.topLeftCorner(k, k) = prob.Z.transpose() * Zs;
        H.topLeftCorner(k, k).diagonal().array() += prob.l2;
        H.topRightCorner(k, 1) = Zs.colwise().sum().transpose();
        H.bottomLeftCorner(1, k) = H.topRightCorner(k, 1).transpose();
        H(k, k) = s.sum();

        Eigen::VectorXd step;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
        const bool used_newton = ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-12;
        if (used_newton) {
            step = ldlt.solve(grad);
            // Predicted decrease below the resolution of f: the iterate is optimal in double precision.
            const double decrement = grad.dot(step);
            if (decrement <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f))) break;
        } else {
            // Lipschitz bound of the logistic loss: 0.25 * ||[Z 1]||^2 + l2.
            const double lipschitz = 0.25 * (prob.Z.squaredNorm() + static_cast<double>(n)) + prob.l2;
            step = grad / lipschitz;
            used_gradient = true;
        }

        double t = 1.0;
        double f_new = f;
        Eigen::VectorXd w_new;
        double b_new = b;
        for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
            w_new = w - t * step.head(k);
            b_new = b - t * step[k];
            f_new = objective(prob, w_new, b_new);
            if (f_new < f) break;
        }
        if (!(f_new < f)) {
            // A Newton direction that cannot lower f has hit the rounding floor of the objective.
            if (!used_newton) throw NonConvergenceError(iter, gnorm);
            break;
        }
        w = w_new;
        b = b_new;
        f = f_new;
    }

    for (std::size_t a = 0; a < active.size(); ++a) m.weights[active[a]] = w[static_cast<Eigen::Index>(a)];
    m.bias = b;
    m.train_meta.n = n;
    m.train_meta.config = cfg;
    m.train_meta.iterations = iter;
    m.train_meta.gradient_norm = gnorm;
    m.train_meta.solver = used_gradient ? "newton+gradient" : "newton";
    return m;
}

double log_likelihood(const LinearModel& m, const FeatureMatrix& X, std::span<const int> y) {
    if (X.rows() != y.size() || X.rows() == 0) throw TrainingError("log_likelihood needs aligned, non-empty data");
    double ll = 0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const double z = m.decision_value(X.row(i));
        ll += y[i] * z - softplus(z);
    }
    return ll / static_cast<double>(X.rows());
}

std::vector<std::pair<std::size_t, std::size_t>> contiguous_folds(std::size_t n, std::size_t k) {
    if (k == 0) throw ValidationError("fold count must be positive");
    if (n < k) throw ValidationError("need at least as many examples as folds");
    std::vector<std::pair<std::size_t, std::size_t>> folds;
    const std::size_t base = n / k;
    const std::size_t extra = n % k;
    std::size_t begin = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        folds.emplace_back(begin, begin + size);
        begin += size;
    }
    return folds;
}

CrossFitResult cross_fit(const FeatureMatrix& X, std::span<const int> y, std::size_t k, const TrainConfig& cfg,
                         std::vector<std::string> feature_names) {
    const std::size_t n = X.rows();
    if (n != y.size()) throw TrainingError("feature rows and labels differ in length");
    CrossFitResult out;
    out.folds = contiguous_folds(n, k);
    out.fold_of.assign(n, 0);
    out.out_of_fold_probs.assign(n, 0.0);

    std::vector<std::future<LinearModel>> jobs;
    for (std::size_t f = 0; f < k; ++f) {
        jobs.push_back(std::async(std::launch::async, [&, f] {
            const auto [begin, end] = out.folds[f];
            std::vector<int> labels;
            for (std::size_t i = 0; i < n; ++i) {
                if (i < begin || i >= end) labels.push_back(y[i]);
            }
            try {
                LinearModel fm = train(X.without_rows(begin, end), labels, cfg, feature_names);
                fm.train_meta.folds = k;
                return fm;
            } catch (const TrainingError& e) {
                throw TrainingError("fold " + std::to_string(f) + ": " + e.what());
            }
        }));
    }
    for (std::size_t f = 0; f < k; ++f) {
        out.fold_models.push_back(jobs[f].get());
        const auto [begin, end] = out.folds[f];
        for (std::size_t i = begin; i < end; ++i) {
            out.fold_of[i] = f;
            out.out_of_fold_probs[i] = out.fold_models.back().predict_proba(X.row(i));
        }
    }
    out.full_model = train(X, y, cfg, std::move(feature_names));
    out.full_model.train_meta.folds = k;
    return out;
}

nlohmann::json to_json(const LinearModel& m) {
    std::vector<int> constant(m.standardization.constant.begin(), m.standardization.constant.end());
    const auto& c = m.train_meta.config;
    return {{"version", kModelVersion},
            {"feature_names", m.feature_names},
            {"weights", m.weights},
            {"bias", m.bias},
            {"standardization",
             {{"mean", m.standardization.mean}, {"stddev", m.standardization.stddev}, {"constant", constant}}},
            {"train_meta",
             {{"n", m.train_meta.n},
              {"folds", m.train_meta.folds},
              {"deterministic", m.train_meta.deterministic},
              {"l2_penalty", c.l2_penalty},
              {"tol", c.tol},
              {"max_iter", c.max_iter},
              {"iterations", m.train_meta.iterations},
              {"gradient_norm", m.train_meta.gradient_norm},
              {"solver", m.train_meta.solver}}}};
}

LinearModel model_from_json(const nlohmann::json& j) {
    LinearModel m;
    try {
        if (j.at("version").get<std::string>() != kModelVersion) {
            throw FormatError("unsupported model version \"" + j.at("version").get<std::string>() + "\"");
        }
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<double>();
        const auto& s = j.at("standardization");
        m.standardization.mean = s.at("mean").get<std::vector<double>>();
        m.standardization.stddev = s.at("stddev").get<std::vector<double>>();
        for (int c : s.at("constant").get<std::vector<int>>()) m.standardization.constant.push_back(c != 0);
        if (auto it = j.find("train_meta"); it != j.end()) {
            const auto& t = *it;
            m.train_meta.n = t.value("n", std::size_t{0});
            m.train_meta.folds = t.value("folds", std::size_t{1});
            m.train_meta.deterministic = t.value("deterministic", true);
            m.train_meta.config.l2_penalty = t.value("l2_penalty", 1.0);
            m.train_meta.config.tol = t.value("tol", 1e-8);
            m.train_meta.config.max_iter = t.value("max_iter", 200);
            m.train_meta.iterations = t.value("iterations", 0);
            m.train_meta.gradient_norm = t.value("gradient_norm", 0.0);
            m.train_meta.solver = t.value("solver", std::string("newton"));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("invalid model artifact: ") + e.what());
    }
    const auto d = m.weights.size();
    if (m.feature_names.size() != d || m.standardization.mean.size() != d || m.standardization.stddev.size() != d ||
        m.standardization.constant.size() != d) {
        throw FormatError("model artifact arrays differ in length");
    }
    for (std::size_t i = 0; i < d; ++i) {
        if (!(m.standardization.stddev[i] > 0)) throw FormatError("model artifact has a non-positive stddev");
        if (m.standardization.constant[i] && m.weights[i] != 0) throw FormatError("constant feature with non-zero weight");
    }
    return m;
}

void save_model(const LinearModel& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write model artifact: " + path.string());
    out << to_json(m).dump(2) << '\n';
}

LinearModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open model artifact: " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string(), 0, e.what());
    }
    return model_from_json(j);
}

}  // namespace regime
