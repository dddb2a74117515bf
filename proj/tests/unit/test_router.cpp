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

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "regime/errors.hpp"
#include "regime/router.hpp"
#include "regime/text_key.hpp"

namespace regime {
namespace {

SelectionResult chosen(std::string text) {
    SelectionResult r;
    r.chosen = SelectedSentence{std::move(text), 0, 0, 0, 0.9};
    return r;
}

// Two-candidate world: Q prefers the distractor, B_rel prefers the gold passage.
struct TinyWorld {
    Query q;
    VectorStore store;
    std::string brel = "The relation sentence.";
};

TinyWorld tiny_world() {
    TinyWorld w;
    w.q.id = "q1";
    w.q.gold_id = "g";
    w.q.bridge_id = "b";
    w.q.pool_ids = {"g", "d"};
    VectorStore::Builder b(2);
    b.add(question_key("q1"), EncoderMode::query, {1.0, 0.0})
        .add(passage_key("g"), EncoderMode::doc, {0.6, 0.8})
        .add(passage_key("d"), EncoderMode::doc, {0.8, 0.6})
        .add(text_key(w.brel), EncoderMode::query, {0.0, 1.0});
    w.store = std::move(b).build();
    return w;
}

TEST(Fuse, ConvexCombination) {
    const std::vector<double> q{0.9, 0.1}, b{0.3, 0.6};
    const auto f = fuse_scores(q, b, 0.5);
    EXPECT_DOUBLE_EQ(f[0], 0.6);
    EXPECT_DOUBLE_EQ(f[1], 0.35);
    EXPECT_EQ(fuse_scores(q, b, 0.0), q);
    EXPECT_EQ(fuse_scores(q, b, 1.0), b);
    EXPECT_THROW(fuse_scores(q, std::vector<double>{1.0}, 0.5), DimensionMismatchError);
    EXPECT_THROW(fuse_scores(q, b, 1.5), ValidationError);
    EXPECT_THROW(fuse_scores(std::vector<double>{std::nan("")}, std::vector<double>{0.0}, 0.5), NonFiniteValueError);
}

TEST(Decide, TauBoundaryIsInclusive) {
    const RouterConfig cfg{.tau = 0.5};
    EXPECT_EQ(decide({}, chosen("s"), 0.5, cfg).action, Action::union_);
    EXPECT_EQ(decide({}, chosen("s"), std::nextafter(0.5, 0.0), cfg).action, Action::q);
}

TEST(Decide, AbstentionForcesQ) {
    const RouterConfig cfg{.tau = 0.1};
    const auto d = decide({}, SelectionResult{}, 0.99, cfg);
    EXPECT_EQ(d.action, Action::q);
    EXPECT_EQ(d.p_union, 0.0);
}

TEST(Decide, PWeightedAlpha) {
    const std::vector<std::pair<double, double>> cases{{0.0, 0.1}, {0.2, 0.1}, {0.5, 0.25}, {0.9, 0.45}, {1.0, 0.5}};
    const RouterConfig cfg{.alpha_mode = AlphaMode::p_weighted};
    for (const auto& [p, alpha] : cases) {
        EXPECT_DOUBLE_EQ(p_weighted_alpha(p), alpha);
        EXPECT_DOUBLE_EQ(decide({}, chosen("s"), p, cfg).alpha_used, alpha);
    }
    EXPECT_EQ(decide({}, chosen("s"), 0.9, RouterConfig{.alpha = 0.25}).alpha_used, 0.25);
}

TEST(Config, ValidationAndParsing) {
    EXPECT_THROW(validate(RouterConfig{.tau = 1.5}), ConfigError);
    EXPECT_THROW(validate(RouterConfig{.alpha = -0.1}), ConfigError);
    EXPECT_THROW(validate(RouterConfig{.k = 0}), ConfigError);
    EXPECT_NO_THROW(validate(RouterConfig{}));
    EXPECT_EQ(parse_alpha_mode("p_weighted"), AlphaMode::p_weighted);
    EXPECT_EQ(parse_label_mode("rank_gain"), LabelMode::rank_gain);
    EXPECT_THROW(parse_alpha_mode("other"), ConfigError);
}

TEST(Rank, TieBreakIndependentOfInputOrder) {
    std::vector<std::string> ids{"c", "a", "d", "b"};
    std::vector<double> scores{0.5, 0.5, 0.9, 0.5};
    const auto ref = rank_candidates(ids, scores, 3);
    std::vector<std::string> order;
    for (const auto& e : ref.entries) order.push_back(e.id);
    EXPECT_EQ(order, (std::vector<std::string>{"d", "a", "b", "c"}));
    std::vector<std::size_t> perm{0, 1, 2, 3};
    while (std::next_permutation(perm.begin(), perm.end())) {
        std::vector<std::string> pi;
        std::vector<double> ps;
        for (auto i : perm) {
            pi.push_back(ids[i]);
            ps.push_back(scores[i]);
        }
        const auto r = rank_candidates(pi, ps, 3);
        for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(r.entries[i].id, order[i]);
    }
    EXPECT_EQ(ref.top().size(), 3u);
}

TEST(Rank, RecallMatchesBruteForceRank) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 300; ++t) {
        const std::vector<std::string> ids{"x", "y", "z"};
        std::vector<double> s(3);
        for (auto& v : s) v = static_cast<double>(rng() % 3);
        const std::size_t k = 1 + rng() % 3;
        const auto ranked = rank_candidates(ids, s, k);
        for (std::size_t g = 0; g < 3; ++g) {
            std::size_t better = 0;
            for (std::size_t j = 0; j < 3; ++j) {
                if (s[j] > s[g] || (s[j] == s[g] && ids[j] < ids[g])) ++better;
            }
            EXPECT_EQ(gold_rank(ranked, ids[g]), better + 1);
            EXPECT_EQ(recall_at_k(ranked, ids[g], k), better < k);
        }
    }
}

TEST(Retrieve, AlphaZeroEqualsQ) {
    const auto w = tiny_world();
    const auto ps = pool_scores(w.q, w.store, w.brel);
    EXPECT_TRUE(ps.has_brel);
    const auto a = rank_q(ps, 1);
    const auto b = rank_fused(ps, 0.0, 1);
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        EXPECT_EQ(a.entries[i].id, b.entries[i].id);
        EXPECT_EQ(a.entries[i].score, b.entries[i].score);
    }
    RoutingDecision d;
    d.action = Action::union_;
    d.alpha_used = 0.0;
    d.selection = chosen(w.brel);
    EXPECT_EQ(retrieve(w.q, d, w.store, 1).entries[0].id, "d");
}

TEST(Retrieve, MissingEmbeddingsListed) {
    auto w = tiny_world();
    w.q.pool_ids.push_back("absent");
    try {
        pool_scores(w.q, w.store, "never embedded");
        FAIL();
    } catch (const MissingEmbeddingError& e) {
        EXPECT_NE(std::string(e.what()).find("absent"), std::string::npos);
    }
}

TEST(Labels, StrictRecallAndRankGain) {
    const auto w = tiny_world();
    EXPECT_EQ(self_supervised_label(w.q, w.store, chosen(w.brel), 0.75, 1), 1);
    EXPECT_EQ(self_supervised_label(w.q, w.store, chosen(w.brel), 0.25, 1), 0);
    EXPECT_EQ(self_supervised_label(w.q, w.store, SelectionResult{}, 0.75, 1), 0);
    EXPECT_EQ(self_supervised_label(w.q, w.store, chosen(w.brel), 0.75, 2), 0);
    EXPECT_EQ(self_supervised_label(w.q, w.store, chosen(w.brel), 0.75, 2, LabelMode::rank_gain), 1);
}

TEST(Router, RejectsMismatchedModels) {
    const TextAnalyzer a;
    LinearModel wrong;
    wrong.feature_names = {"x"};
    EXPECT_THROW(Router(a, wrong, wrong, RouterConfig{}), ValidationError);
}

}  // namespace
}  // namespace regime
