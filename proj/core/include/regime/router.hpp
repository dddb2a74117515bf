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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "regime/corpus.hpp"
#include "regime/embedding_store.hpp"
#include "regime/linear_model.hpp"
#include "regime/selector.hpp"
#include "regime/text_analysis.hpp"

namespace regime {

enum class Action { q, union_ };
enum class AlphaMode { frozen, p_weighted };
/// How a training query is labeled "Union helps".
enum class LabelMode { strict_recall, rank_gain };

std::string_view to_string(Action a);
std::string_view to_string(AlphaMode m);
std::string_view to_string(LabelMode m);
AlphaMode parse_alpha_mode(std::string_view s);
LabelMode parse_label_mode(std::string_view s);

struct RouterConfig {
    double tau = 0.5;
    double alpha = 0.25;
    AlphaMode alpha_mode = AlphaMode::frozen;
    std::size_t k = 5;
    LabelMode label_mode = LabelMode::strict_recall;
    double abstain_threshold = 0.0;  // selector abstention, 0 disables
};

/// Throws ConfigError unless alpha, tau in [0,1] and k >= 1.
void validate(const RouterConfig& cfg);

struct RoutingDecision {
    Action action = Action::q;
    double p_union = 0;
    double alpha_used = 0;
    RouterFeatures features;
    SelectionResult selection;
};

/// Element-wise (1 - alpha) * q + alpha * brel.
std::vector<double> fuse_scores(std::span<const double> q_scores, std::span<const double> brel_scores, double alpha);

/// clip(p * 0.5, 0.1, 0.5)
double p_weighted_alpha(double p_union);

/// Applies the threshold (Union iff p_union >= tau) and the alpha rule. An
/// abstained selection forces action Q with p_union reported as 0.
RoutingDecision decide(const RouterFeatures& features, SelectionResult selection, double p_union,
                       const RouterConfig& cfg);

std::vector<std::string> router_feature_names();

/// Sentence selection, feature extraction and binary routing for one query.
class Router {
 public:
    Router(const TextAnalyzer& analyzer, LinearModel selector_model, LinearModel router_model, RouterConfig cfg);

    SelectionResult select_sentence(const Query& q, const Passage& bridge) const;
    RoutingDecision route(const Query& q, const Passage& bridge) const;
    /// Routing with an externally supplied P(Union), e.g. an out-of-fold estimate.
    RoutingDecision route_with_probability(const Query& q, const Passage& bridge, double p_union) const;
    RoutingDecision route_selection(const Query& q, const Passage& bridge, SelectionResult selection) const;

    const TextAnalyzer& analyzer() const noexcept { return *analyzer_; }
    const LinearModel& selector_model() const noexcept { return selector_; }
    const LinearModel& router_model() const noexcept { return router_; }
    const RouterConfig& config() const noexcept { return cfg_; }

 private:
    const TextAnalyzer* analyzer_;
    LinearModel selector_;
    LinearModel router_;
    RouterConfig cfg_;
};

RoutingDecision route(const TextAnalyzer& analyzer, const Query& q, const Passage& bridge,
                      const LinearModel& selector_model, const LinearModel& router_model, const RouterConfig& cfg);

struct RankedEntry {
    std::string id;
    double score = 0;
};

/// Candidates ordered by descending score, ties by ascending id.
struct RankedList {
    std::vector<RankedEntry> entries;
    std::size_t k = 5;

    std::span<const RankedEntry> top() const;
};

RankedList rank_candidates(std::span<const std::string> ids, std::span<const double> scores, std::size_t k);

/// Question-only and B_rel query scores against every pool passage.
struct PoolScores {
    std::vector<std::string> ids;
    std::vector<double> q;
    std::vector<double> brel;  // equals q when there is no B_rel
    bool has_brel = false;
};

/// B_rel is looked up under text_key(brel_text) in query mode; an empty text
/// means no B_rel. Throws MissingEmbeddingError listing every absent vector.
PoolScores pool_scores(const Query& q, const VectorStore& store, std::string_view brel_text);

RankedList rank_q(const PoolScores& ps, std::size_t k);
RankedList rank_fused(const PoolScores& ps, double alpha, std::size_t k);

/// Ranking the routing decision prescribes.
RankedList retrieve(const Query& q, const RoutingDecision& decision, const VectorStore& store, std::size_t k);

bool recall_at_k(const RankedList& ranked, std::string_view gold_id, std::size_t k);
/// 1-based rank of gold, if present.
std::optional<std::size_t> gold_rank(const RankedList& ranked, std::string_view gold_id);

/// 1 iff Union (at alpha) beats question-only retrieval for this query:
/// strict_recall: Union hits R@k and Q misses; rank_gain: gold ranks strictly higher.
int self_supervised_label(const Query& q, const VectorStore& store, const SelectionResult& selection, double alpha,
                          std::size_t k, LabelMode mode = LabelMode::strict_recall);

struct RouterExample {
    std::string query_id;
    RouterFeatures features;
    SelectionResult selection;
    int label = 0;
};

std::vector<RouterExample> build_router_examples(const TextAnalyzer& analyzer, const Dataset& ds,
                                                 const VectorStore& store, const LinearModel& selector_model,
                                                 const RouterConfig& cfg, std::size_t parallelism = 1);

struct RouterTraining {
    std::vector<RouterExample> examples;
    CrossFitResult fit;
};

/// Self-supervised router training with k-fold cross-fitting in dataset order.
RouterTraining train_router(const TextAnalyzer& analyzer, const Dataset& ds, const VectorStore& store,
                            const LinearModel& selector_model, const RouterConfig& cfg, const TrainConfig& train_cfg,
                            std::size_t folds = 5, std::size_t parallelism = 1);

/// Per-query record of the deployed pipeline.
struct QueryOutcome {
    std::string query_id;
    QueryType qtype = QueryType::other;
    RoutingDecision decision;
    std::optional<std::size_t> rank_q;
    std::optional<std::size_t> rank_union;  // Union at decision.alpha_used
    bool hit_q = false;
    bool hit_union = false;
    bool hit_routed = false;
};

QueryOutcome evaluate_query(const Router& router, const Dataset& ds, const VectorStore& store, const Query& q,
                            std::optional<double> p_union_override = std::nullopt);

/// One routing-trace object: features, p_union, action, alpha_used and gold
/// ranks under both actions.
nlohmann::json trace_json(const QueryOutcome& o);

nlohmann::json to_json(const RouterConfig& cfg);

}  // namespace regime
