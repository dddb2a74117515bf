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

#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "regime/experiments.hpp"
#include "regime/linear_model.hpp"
#include "regime/router.hpp"
#include "regime/stats.hpp"
#include "regime/text_analysis.hpp"
#include "regime/text_key.hpp"

namespace {

using namespace regime;

std::vector<double> gaussian(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

void BM_PerQueryAuc(benchmark::State& state) {
    const auto pool = gaussian(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(per_query_auc(0.3, pool));
}
BENCHMARK(BM_PerQueryAuc)->Arg(50)->Arg(200)->Arg(2000);

void BM_KendallTau(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = gaussian(n, 2), b = gaussian(n, 3);
    for (auto _ : state) benchmark::DoNotOptimize(kendall_tau(a, b).tau);
}
BENCHMARK(BM_KendallTau)->Arg(30)->Arg(1000)->Arg(100000);

void BM_ScoreAndRank(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const std::uint32_t dim = 768;
    VectorStore::Builder b(dim);
    b.add(question_key("q"), EncoderMode::query, gaussian(dim, 4));
    std::vector<std::string> keys, ids;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back("p" + std::to_string(i));
        keys.push_back(passage_key(ids.back()));
        b.add(keys.back(), EncoderMode::doc, gaussian(dim, 10 + i));
    }
    const auto store = std::move(b).build();
    for (auto _ : state) {
        const auto s = score(store, question_key("q"), EncoderMode::query, keys);
        benchmark::DoNotOptimize(rank_candidates(ids, s, 5).entries.front().score);
    }
}
BENCHMARK(BM_ScoreAndRank)->Arg(20)->Arg(200);

void BM_TextFeatures(benchmark::State& state) {
    const TextAnalyzer a;
    Query q;
    q.question = "Which of Person A or Person B was born earlier?";
    q.hop2_title = "Person A";
    const Passage bridge{"b", "Person B",
                         "Person B is a painter from the valley. Person B was born in 1900 to Mr. Carl Dane. "
                         "The painter later studied at Alder Hall in the U.S. and retired near the coast."};
    for (auto _ : state) {
        const auto sentences = a.split_sentences(bridge.body);
        const auto f = a.router_features(q, sentences[1].text, bridge);
        benchmark::DoNotOptimize(f.b_rel_frac);
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            benchmark::DoNotOptimize(a.sentence_features(sentences[i].text, q.question, i, sentences.size()));
        }
    }
}
BENCHMARK(BM_TextFeatures);

void BM_TrainLogistic(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0.0, 1.0);
    FeatureMatrix X(5);
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(5);
        for (auto& v : row) v = g(rng);
        X.add_row(row);
        y.push_back(row[0] + 0.5 * row[2] + g(rng) > 0 ? 1 : 0);
    }
    for (auto _ : state) benchmark::DoNotOptimize(train(X, y).bias);
}
BENCHMARK(BM_TrainLogistic)->Arg(881)->Arg(10000);

void BM_SyntheticCalibration(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(synthetic_calibration({.n = 1000, .pool_size = 200}).fit.r_squared);
    }
}
BENCHMARK(BM_SyntheticCalibration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
