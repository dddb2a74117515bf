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

#include "regime/router.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "regime/errors.hpp"
#include "regime/parallel.hpp"
#include "regime/text_key.hpp"

namespace regime {

std::string_view to_string(Action a) { return a == Action::q ? "Q" : "Union"; }
std::string_view to_string(AlphaMode m) { return m == AlphaMode::frozen ? "frozen" : "p_weighted"; }
std::string_view to_string(LabelMode m) { return m == LabelMode::strict_recall ? "strict_recall" : "rank_gain"; }

AlphaMode parse_alpha_mode(std::string_view s) {
    if (s == "frozen") return AlphaMode::frozen;
    if (s == "p_weighted") return AlphaMode::p_weighted;
    throw ConfigError("unknown alpha mode \"" + std::string(s) + "\" (expected frozen or p_weighted)");
}

LabelMode parse_label_mode(std::string_view s) {
    if (s == "strict_recall") return LabelMode::strict_recall;
    if (s == "rank_gain") return LabelMode::rank_gain;
    throw ConfigError("unknown label mode \"" + std::string(s) + "\" (expected strict_recall or rank_gain)");
}

void validate(const RouterConfig& cfg) {
    if (!(cfg.alpha >= 0 && cfg.alpha <= 1)) throw ConfigError("alpha must lie in [0, 1]");
    if (!(cfg.tau >= 0 && cfg.tau <= 1)) throw ConfigError("tau must lie in [0, 1]");
    if (cfg.k < 1) throw ConfigError("k must be at least 1");
    if (!(cfg.abstain_threshold >= 0 && cfg.abstain_threshold <= 1)) {
        throw ConfigError("abstain threshold must lie in [0, 1]");
    }
}

std::vector<double> fuse_scores(std::span<const double> q_scores, std::span<const double> brel_scores, double alpha) {
    if (q_scores.size() != brel_scores.size()) throw DimensionMismatchError("score lists differ in length");
    if (!(alpha >= 0 && alpha <= 1)) throw ValidationError("alpha must lie in [0, 1]");
    std::vector<double> out(q_scores.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!std::isfinite(q_scores[i]) || !std::isfinite(brel_scores[i])) {
            throw NonFiniteValueError("non-finite retrieval score");
        }
        out[i] = (1.0 - alpha) * q_scores[i] + alpha * brel_scores[i];
    }
    return out;
}

double p_weighted_alpha(double p_union) { return std::clamp(p_union * 0.5, 0.1, 0.5); }

RoutingDecision decide(const RouterFeatures& features, SelectionResult selection, double p_union,
                       const RouterConfig& cfg) {
    RoutingDecision d;
    d.features = features;
    d.selection = std::move(selection);
    d.p_union = d.selection.abstained() ? 0.0 : p_union;
    d.action = !d.selection.abstained() && d.p_union >= cfg.tau ? Action::union_ : Action::q;
    d.alpha_used = cfg.alpha_mode == AlphaMode::frozen ? cfg.alpha : p_weighted_alpha(d.p_union);
    return d;
}

std::vector<std::string> router_feature_names() {
    return {RouterFeatures::kNames.begin(), RouterFeatures::kNames.end()};
}

Router::Router(const TextAnalyzer& analyzer, LinearModel selector_model, LinearModel router_model, RouterConfig cfg)
    : analyzer_(&analyzer), selector_(std::move(selector_model)), router_(std::move(router_model)), cfg_(cfg) {
    validate(cfg_);
    if (router_.feature_names != router_feature_names()) {
        throw ValidationError("router model features do not match the router feature layout");
    }
    if (selector_.feature_names != selector_feature_names()) {
        throw ValidationError("selector model features do not match the sentence feature layout");
    }
}

SelectionResult Router::select_sentence(const Query& q, const Passage& bridge) const {
    return select(*analyzer_, bridge, q.question, selector_, cfg_.abstain_threshold);
}

RoutingDecision Router::route_selection(const Query& q, const Passage& bridge, SelectionResult selection) const {
    const auto features = analyzer_->router_features(q, selection.text(), bridge);
    const double p = router_.predict_proba(features.to_vector());
    return decide(features, std::move(selection), p, cfg_);
}

RoutingDecision Router::route(const Query& q, const Passage& bridge) const {
    return route_selection(q, bridge, select_sentence(q, bridge));
}

RoutingDecision Router::route_with_probability(const Query& q, const Passage& bridge, double p_union) const {
    auto selection = select_sentence(q, bridge);
    const auto features = analyzer_->router_features(q, selection.text(), bridge);
    return decide(features, std::move(selection), p_union, cfg_);
}

RoutingDecision route(const TextAnalyzer& analyzer, const Query& q, const Passage& bridge,
                      const LinearModel& selector_model, const LinearModel& router_model, const RouterConfig& cfg) {
    return Router(analyzer, selector_model, router_model, cfg).route(q, bridge);
}

std::span<const RankedEntry> RankedList::top() const {
    return {entries.data(), std::min(k, entries.size())};
}

RankedList rank_candidates(std::span<const std::string> ids, std::span<const double> scores, std::size_t k) {
    if (ids.size() != scores.size()) throw DimensionMismatchError("ids and scores differ in length");
    RankedList out;
    out.k = k;
    out.entries.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) out.entries.push_back({ids[i], scores[i]});
    std::sort(out.entries.begin(), out.entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    return out;
}

PoolScores pool_scores(const Query& q, const VectorStore& store, std::string_view brel_text) {
    PoolScores ps;
    ps.ids = q.pool_ids;
    std::vector<std::string> keys;
    keys.reserve(q.pool_ids.size());
    for (const auto& id : q.pool_ids) keys.push_back(passage_key(id));

    std::vector<std::string> missing;
    const auto qk = question_key(q.id);
    if (!store.contains(qk, EncoderMode::query)) missing.push_back(qk + " (query)");
    for (const auto& k : keys) {
        if (!store.contains(k, EncoderMode::doc)) missing.push_back(k + " (doc)");
    }
    ps.has_brel = !brel_text.empty();
    const auto bk = ps.has_brel ? text_key(brel_text) : std::string{};
    if (ps.has_brel && !store.contains(bk, EncoderMode::query)) missing.push_back(bk + " (query)");
    if (!missing.empty()) throw MissingEmbeddingError(std::move(missing));

    ps.q = score(store, qk, EncoderMode::query, keys);
    ps.brel = ps.has_brel ? score(store, bk, EncoderMode::query, keys) : ps.q;
    return ps;
}

RankedList rank_q(const PoolScores& ps, std::size_t k) { return rank_candidates(ps.ids, ps.q, k); }

RankedList rank_fused(const PoolScores& ps, double alpha, std::size_t k) {
    return rank_candidates(ps.ids, fuse_scores(ps.q, ps.brel, alpha), k);
}

RankedList retrieve(const Query& q, const RoutingDecision& decision, const VectorStore& store, std::size_t k) {
    const bool fused = decision.action == Action::union_;
    const auto ps = pool_scores(q, store, fused ? decision.selection.text() : std::string_view{});
    return fused ? rank_fused(ps, decision.alpha_used, k) : rank_q(ps, k);
}

bool recall_at_k(const RankedList& ranked, std::string_view gold_id, std::size_t k) {
    const auto n = std::min(k, ranked.entries.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (ranked.entries[i].id == gold_id) return true;
    }
    return false;
}

std::optional<std::size_t> gold_rank(const RankedList& ranked, std::string_view gold_id) {
    for (std::size_t i = 0; i < ranked.entries.size(); ++i) {
        if (ranked.entries[i].id == gold_id) return i + 1;
    }
    return std::nullopt;
}

namespace {

int label_from_ranks(std::optional<std::size_t> rank_q, std::optional<std::size_t> rank_union, std::size_t k,
                     LabelMode mode) {
    if (mode == LabelMode::strict_recall) {
        const bool hit_q = rank_q && *rank_q <= k;
        const bool hit_u = rank_union && *rank_union <= k;
        return hit_u && !hit_q ? 1 : 0;
    }
    if (!rank_union) return 0;
    return !rank_q || *rank_union < *rank_q ? 1 : 0;
}

}  // namespace

int self_supervised_label(const Query& q, const VectorStore& store, const SelectionResult& selection, double alpha,
                          std::size_t k, LabelMode mode) {
    if (selection.abstained()) return 0;
    const auto ps = pool_scores(q, store, selection.text());
    return label_from_ranks(gold_rank(rank_q(ps, k), q.gold_id), gold_rank(rank_fused(ps, alpha, k), q.gold_id), k,
                            mode);
}

std::vector<RouterExample> build_router_examples(const TextAnalyzer& analyzer, const Dataset& ds,
                                                 const VectorStore& store, const LinearModel& selector_model,
                                                 const RouterConfig& cfg, std::size_t parallelism) {
    validate(cfg);
    return parallel_map(ds.queries.size(), parallelism, [&](std::size_t i) {
        const auto& q = ds.queries[i];
        const auto& bridge = ds.passage(q.bridge_id);
        RouterExample ex;
        ex.query_id = q.id;
        ex.selection = select(analyzer, bridge, q.question, selector_model, cfg.abstain_threshold);
        ex.features = analyzer.router_features(q, ex.selection.text(), bridge);
        ex.label = self_supervised_label(q, store, ex.selection, cfg.alpha, cfg.k, cfg.label_mode);
        return ex;
    });
}

RouterTraining train_router(const TextAnalyzer& analyzer, const Dataset& ds, const VectorStore& store,
                            const LinearModel& selector_model, const RouterConfig& cfg, const TrainConfig& train_cfg,
                            std::size_t folds, std::size_t parallelism) {
    RouterTraining out;
    out.examples = build_router_examples(analyzer, ds, store, selector_model, cfg, parallelism);
    FeatureMatrix X(RouterFeatures::kNames.size());
    std::vector<int> y;
    for (const auto& ex : out.examples) {
        X.add_row(ex.features.to_vector());
        y.push_back(ex.label);
    }
    out.fit = cross_fit(X, y, folds, train_cfg, router_feature_names());
    return out;
}

QueryOutcome evaluate_query(const Router& router, const Dataset& ds, const VectorStore& store, const Query& q,
                            std::optional<double> p_union_override) {
    const auto& bridge = ds.passage(q.bridge_id);
    QueryOutcome o;
    o.query_id = q.id;
    o.qtype = q.qtype;
    o.decision = p_union_override ? router.route_with_probability(q, bridge, *p_union_override)
                                  : router.route(q, bridge);
    const auto k = router.config().k;
    const auto ps = pool_scores(q, store, o.decision.selection.text());
    o.rank_q = gold_rank(rank_q(ps, k), q.gold_id);
    o.rank_union = gold_rank(rank_fused(ps, o.decision.alpha_used, k), q.gold_id);
    o.hit_q = o.rank_q && *o.rank_q <= k;
    o.hit_union = o.rank_union && *o.rank_union <= k;
    o.hit_routed = o.decision.action == Action::union_ ? o.hit_union : o.hit_q;
    return o;
}

nlohmann::json trace_json(const QueryOutcome& o) {
    const auto& d = o.decision;
    nlohmann::json features = nlohmann::json::object();
    const auto values = d.features.to_vector();
    for (std::size_t i = 0; i < values.size(); ++i) features[std::string(RouterFeatures::kNames[i])] = values[i];
    auto rank = [](const std::optional<std::size_t>& r) { return r ? nlohmann::json(*r) : nlohmann::json(nullptr); };
    nlohmann::json j{{"id", o.query_id},
                     {"qtype", std::string(to_string(o.qtype))},
                     {"features", features},
                     {"p_union", d.p_union},
                     {"action", std::string(to_string(d.action))},
                     {"alpha_used", d.alpha_used},
                     {"selector_abstained", d.selection.abstained()},
                     {"gold_rank_q", rank(o.rank_q)},
                     {"gold_rank_union", rank(o.rank_union)},
                     {"hit_q", o.hit_q},
                     {"hit_routed", o.hit_routed}};
    if (d.selection.chosen) {
        j["b_rel_index"] = d.selection.chosen->index;
        j["b_rel_confidence"] = d.selection.chosen->confidence;
    }
    return j;
}

nlohmann::json to_json(const RouterConfig& cfg) {
    return {{"tau", cfg.tau},
            {"alpha", cfg.alpha},
            {"alpha_mode", std::string(to_string(cfg.alpha_mode))},
            {"k", cfg.k},
            {"label_mode", std::string(to_string(cfg.label_mode))},
            {"abstain_threshold", cfg.abstain_threshold}};
}

}  // namespace regime
