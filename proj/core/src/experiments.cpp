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

#include "regime/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "regime/errors.hpp"
#include "regime/parallel.hpp"
#include "regime/selector.hpp"
#include "regime/text_key.hpp"

namespace regime {

namespace {

void check_context(const ExperimentContext& ctx) {
    if (!ctx.analyzer || !ctx.ds || !ctx.store) throw ConfigError("experiment context is incomplete");
    validate(ctx.cfg);
}

struct GoldAndPool {
    double gold = 0;
    std::vector<double> distractors;
};

std::vector<std::string> distractor_keys(const Query& q) {
    std::vector<std::string> keys;
    keys.reserve(q.pool_ids.size());
    for (const auto& id : q.pool_ids) {
        if (id != q.gold_id) keys.push_back(passage_key(id));
    }
    if (keys.empty()) throw ValidationError("query " + q.id + " has no distractors in its pool");
    return keys;
}

// Scores of the query vector (key, mode) against the gold passage and the
// pool without gold. Throws MissingEmbeddingError listing every absent vector.
GoldAndPool gold_and_pool(const VectorStore& store, const Query& q, const std::string& key, EncoderMode mode) {
    auto keys = distractor_keys(q);
    keys.push_back(passage_key(q.gold_id));
    auto scores = score(store, key, mode, keys);
    GoldAndPool out;
    out.gold = scores.back();
    scores.pop_back();
    out.distractors = std::move(scores);
    return out;
}

double auc_of(const GoldAndPool& s) { return per_query_auc(s.gold, s.distractors); }

SelectionResult selection_at(const TextAnalyzer& analyzer, const Passage& bridge, std::size_t index) {
    const auto sentences = analyzer.split_sentences(bridge.body);
    if (index >= sentences.size()) return {};
    const auto& s = sentences[index];
    return SelectionResult{SelectedSentence{s.text, index, s.begin, s.end, 1.0}};
}

double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double hit_rate(const std::vector<bool>& hits) {
    if (hits.empty()) return 0.0;
    const auto n = std::count(hits.begin(), hits.end(), true);
    return static_cast<double>(n) / static_cast<double>(hits.size());
}

Router make_router(const ExperimentContext& ctx, const Models& models, const RouterConfig& cfg) {
    return Router(*ctx.analyzer, models.selector, models.router, cfg);
}

std::optional<double> oof_for(const Models& models, const std::string& query_id) {
    if (!models.oof_p_union) return std::nullopt;
    auto it = models.oof_p_union->find(query_id);
    if (it == models.oof_p_union->end()) {
        throw IntegrityError("no out-of-fold probability for query " + query_id, {query_id});
    }
    return it->second;
}

std::vector<QueryOutcome> evaluate_all(const ExperimentContext& ctx, const Models& models, const RouterConfig& cfg) {
    const Router router = make_router(ctx, models, cfg);
    const auto& qs = ctx.ds->queries;
    auto outcomes = parallel_map(qs.size(), ctx.parallelism, [&](std::size_t i) {
        return evaluate_query(router, *ctx.ds, *ctx.store, qs[i], oof_for(models, qs[i].id));
    });
    std::sort(outcomes.begin(), outcomes.end(),
              [](const QueryOutcome& a, const QueryOutcome& b) { return a.query_id < b.query_id; });
    return outcomes;
}

std::string collapse_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    return out + "\"";
}

std::string rank_field(const std::optional<std::size_t>& r) { return r ? std::to_string(*r) : std::string{}; }

}  // namespace

std::string embedding_text(const Passage& p) {
    if (p.title.empty()) return p.body;
    return p.title + "\n" + p.body;
}

std::string remove_span(std::string_view body, std::size_t begin, std::size_t end) {
    if (begin > end || end > body.size()) throw ValidationError("span lies outside the passage body");
    std::string joined(body.substr(0, begin));
    joined.push_back(' ');
    joined.append(body.substr(end));
    return collapse_whitespace(joined);
}

std::vector<RequiredText> required_texts(const TextAnalyzer& analyzer, const Dataset& ds,
                                         const LinearModel* selector_model, double abstain_threshold) {
    std::set<RequiredText> out;
    auto add_passage = [&](const std::string& id, EncoderMode mode) {
        out.insert({passage_key(id), mode, embedding_text(ds.passage(id))});
    };
    auto add_text = [&](const std::string& text) {
        if (!text.empty()) out.insert({text_key(text), EncoderMode::query, text});
    };
    for (const auto& q : ds.queries) {
        out.insert({question_key(q.id), EncoderMode::query, q.question});
        for (const auto& id : q.pool_ids) add_passage(id, EncoderMode::doc);
        add_passage(q.gold_id, EncoderMode::doc);
        add_passage(q.bridge_id, EncoderMode::query);

        const auto& bridge = ds.passage(q.bridge_id);
        const auto sel = selector_model ? select(analyzer, bridge, q.question, *selector_model, abstain_threshold)
                                        : SelectionResult{};
        if (sel.chosen) {
            add_text(sel.chosen->text);
            if (analyzer.split_sentences(bridge.body).size() >= 2) {
                add_text(remove_span(bridge.body, sel.chosen->begin, sel.chosen->end));
            }
        }
        if (auto idx = oracle_label(analyzer, bridge, q.hop2_title)) {
            add_text(std::string(selection_at(analyzer, bridge, *idx).text()));
        }
    }
    return {out.begin(), out.end()};
}

// ---- margins ---------------------------------------------------------------

std::vector<MarginRecord> compute_margins(const ExperimentContext& ctx) {
    check_context(ctx);
    const auto& qs = ctx.ds->queries;
    auto records = parallel_map(qs.size(), ctx.parallelism, [&](std::size_t i) {
        const auto& q = qs[i];
        const auto sq = gold_and_pool(*ctx.store, q, question_key(q.id), EncoderMode::query);
        const auto sb = gold_and_pool(*ctx.store, q, passage_key(q.bridge_id), EncoderMode::query);
        const auto mq = separation_margin(sq.gold, sq.distractors);
        const auto mb = separation_margin(sb.gold, sb.distractors);
        MarginRecord r;
        r.query_id = q.id;
        r.qtype = q.qtype;
        r.s_q = mq.margin;
        r.s_b = mb.margin;
        r.sigma_pool = mq.sigma;
        r.sigma_bridge = mb.sigma;
        r.auc_q = auc_of(sq);
        r.auc_b = auc_of(sb);
        r.degenerate = mq.degenerate || mb.degenerate;
        return r;
    });
    std::sort(records.begin(), records.end(),
              [](const MarginRecord& a, const MarginRecord& b) { return a.query_id < b.query_id; });
    return records;
}

// ---- knockout --------------------------------------------------------------

KnockoutSummary run_knockout(const ExperimentContext& ctx, const LinearModel& selector_model) {
    check_context(ctx);
    enum class Status { kept, single_sentence, abstained };
    struct Item {
        Status status = Status::kept;
        KnockoutRecord record;
    };
    const auto& qs = ctx.ds->queries;
    auto items = parallel_map(qs.size(), ctx.parallelism, [&](std::size_t i) {
        const auto& q = qs[i];
        const auto& bridge = ctx.ds->passage(q.bridge_id);
        Item item;
        if (ctx.analyzer->split_sentences(bridge.body).size() < 2) {
            item.status = Status::single_sentence;
            return item;
        }
        const auto sel = select(*ctx.analyzer, bridge, q.question, selector_model, ctx.cfg.abstain_threshold);
        if (sel.abstained()) {
            item.status = Status::abstained;
            return item;
        }
        const auto minus = remove_span(bridge.body, sel.chosen->begin, sel.chosen->end);
        if (minus.empty()) {
            item.status = Status::single_sentence;
            return item;
        }
        item.record.query_id = q.id;
        item.record.qtype = q.qtype;
        item.record.auc_full =
            auc_of(gold_and_pool(*ctx.store, q, passage_key(q.bridge_id), EncoderMode::query));
        item.record.auc_rel = auc_of(gold_and_pool(*ctx.store, q, text_key(sel.chosen->text), EncoderMode::query));
        item.record.auc_minus = auc_of(gold_and_pool(*ctx.store, q, text_key(minus), EncoderMode::query));
        return item;
    });

    KnockoutSummary s;
    std::size_t minus_pos = 0, minus_neg = 0, rel_pos = 0, rel_neg = 0;
    std::vector<double> d_minus, d_rel;
    for (auto& item : items) {
        if (item.status == Status::single_sentence) {
            ++s.excluded_single_sentence;
            continue;
        }
        if (item.status == Status::abstained) {
            ++s.excluded_abstained;
            continue;
        }
        const auto& r = item.record;
        d_minus.push_back(r.auc_full - r.auc_minus);
        d_rel.push_back(r.auc_full - r.auc_rel);
        if (d_minus.back() > 0) ++minus_pos;
        if (d_minus.back() < 0) ++minus_neg;
        if (d_rel.back() > 0) ++rel_pos;
        if (d_rel.back() < 0) ++rel_neg;
        s.records.push_back(r);
    }
    std::sort(s.records.begin(), s.records.end(),
              [](const KnockoutRecord& a, const KnockoutRecord& b) { return a.query_id < b.query_id; });
    s.mean_full_minus = mean(d_minus);
    s.mean_full_rel = mean(d_rel);
    s.mean_minus_full = -s.mean_full_minus;
    s.sign_test_minus = mcnemar(minus_pos, minus_neg);
    s.sign_test_rel = mcnemar(rel_pos, rel_neg);
    return s;
}

// ---- mixture decomposition -------------------------------------------------

std::string regime_verdict(double delta_q_minus_b) {
    if (delta_q_minus_b > kRegimeVerdictEpsilon) return "Q_dominant";
    if (delta_q_minus_b < -kRegimeVerdictEpsilon) return "B_dominant";
    return "neutral";
}

RegimeTable mixture_decomposition(std::vector<RegimeRow> rows) {
    RegimeTable t;
    for (auto& r : rows) {
        r.verdict = regime_verdict(r.delta_q_minus_b);
        t.aggregate_delta += r.prevalence * r.delta_q_minus_b;
    }
    std::sort(rows.begin(), rows.end(), [](const RegimeRow& a, const RegimeRow& b) {
        if (a.prevalence != b.prevalence) return a.prevalence > b.prevalence;
        return a.qtype < b.qtype;
    });
    t.rows = std::move(rows);
    return t;
}

RegimeTable mixture_decomposition(std::span<const TypeAucRecord> per_query) {
    if (per_query.empty()) throw ValidationError("mixture decomposition needs at least one query");
    std::map<std::string, std::pair<std::size_t, double>> by_type;
    for (const auto& r : per_query) {
        auto& [count, sum] = by_type[std::string(to_string(r.qtype))];
        ++count;
        sum += r.auc_q - r.auc_b;
    }
    std::vector<RegimeRow> rows;
    const double n = static_cast<double>(per_query.size());
    for (const auto& [type, cs] : by_type) {
        RegimeRow row;
        row.qtype = type;
        row.count = cs.first;
        row.prevalence = static_cast<double>(cs.first) / n;
        row.delta_q_minus_b = cs.second / static_cast<double>(cs.first);
        rows.push_back(row);
    }
    return mixture_decomposition(std::move(rows));
}

double micro_auc(std::span<const double> gold_scores, std::span<const double> distractor_scores) {
    if (gold_scores.empty() || distractor_scores.empty()) throw ValidationError("micro AUC needs scores on both sides");
    std::vector<double> sorted(distractor_scores.begin(), distractor_scores.end());
    std::sort(sorted.begin(), sorted.end());
    double credit = 0;
    for (double g : gold_scores) {
        const auto lo = std::lower_bound(sorted.begin(), sorted.end(), g) - sorted.begin();
        const auto hi = std::upper_bound(sorted.begin(), sorted.end(), g) - sorted.begin();
        credit += static_cast<double>(lo) + 0.5 * static_cast<double>(hi - lo);
    }
    return credit / (static_cast<double>(gold_scores.size()) * static_cast<double>(sorted.size()));
}

RegimeTable mixture_from_margins(const ExperimentContext& ctx, std::span<const MarginRecord> margins) {
    check_context(ctx);
    std::vector<TypeAucRecord> per_query;
    per_query.reserve(margins.size());
    for (const auto& m : margins) per_query.push_back({m.qtype, m.auc_q, m.auc_b});
    auto table = mixture_decomposition(per_query);

    std::vector<double> gq, dq, gb, db;
    for (const auto& q : ctx.ds->queries) {
        auto sq = gold_and_pool(*ctx.store, q, question_key(q.id), EncoderMode::query);
        auto sb = gold_and_pool(*ctx.store, q, passage_key(q.bridge_id), EncoderMode::query);
        gq.push_back(sq.gold);
        gb.push_back(sb.gold);
        dq.insert(dq.end(), sq.distractors.begin(), sq.distractors.end());
        db.insert(db.end(), sb.distractors.begin(), sb.distractors.end());
    }
    if (!gq.empty()) table.micro_delta = micro_auc(gq, dq) - micro_auc(gb, db);
    return table;
}

// ---- main evaluation -------------------------------------------------------

EvalReport run_main_eval(const ExperimentContext& ctx, const Models& models) {
    check_context(ctx);
    EvalReport r;
    r.outcomes = evaluate_all(ctx, models, ctx.cfg);
    std::vector<bool> hq, hr;
    std::size_t routed = 0;
    for (const auto& o : r.outcomes) {
        hq.push_back(o.hit_q);
        hr.push_back(o.hit_routed);
        if (o.hit_routed && !o.hit_q) ++r.wins;
        if (o.hit_q && !o.hit_routed) ++r.losses;
        if (o.decision.action == Action::union_) ++routed;
    }
    r.r_at_k_q = hit_rate(hq);
    r.r_at_k_router = hit_rate(hr);
    r.delta = r.r_at_k_router - r.r_at_k_q;
    r.mcnemar = mcnemar(r.wins, r.losses);
    r.routing_rate = r.outcomes.empty() ? 0.0
                                        : static_cast<double>(routed) / static_cast<double>(r.outcomes.size());
    return r;
}

// ---- oracle analysis -------------------------------------------------------

OracleReport run_oracle_analysis(const ExperimentContext& ctx, const Models& models) {
    check_context(ctx);
    const Router router = make_router(ctx, models, ctx.cfg);
    const auto k = ctx.cfg.k;
    struct Hits {
        bool q = false, learned = false, oracle_selector = false, oracle_router = false;
    };
    const auto& qs = ctx.ds->queries;
    const auto hits = parallel_map(qs.size(), ctx.parallelism, [&](std::size_t i) {
        const auto& q = qs[i];
        const auto& bridge = ctx.ds->passage(q.bridge_id);
        const auto override_p = oof_for(models, q.id);
        Hits h;
        const auto learned = evaluate_query(router, *ctx.ds, *ctx.store, q, override_p);
        h.q = learned.hit_q;
        h.learned = learned.hit_routed;
        h.oracle_router = learned.hit_q || learned.hit_union;

        SelectionResult sel;
        if (auto idx = oracle_label(*ctx.analyzer, bridge, q.hop2_title)) sel = selection_at(*ctx.analyzer, bridge, *idx);
        if (sel.abstained()) sel = learned.decision.selection;
        RoutingDecision d;
        if (override_p) {
            d = decide(ctx.analyzer->router_features(q, sel.text(), bridge), sel, *override_p, ctx.cfg);
        } else {
            d = router.route_selection(q, bridge, sel);
        }
        h.oracle_selector = recall_at_k(retrieve(q, d, *ctx.store, k), q.gold_id, k);
        return h;
    });
    std::vector<bool> b, l, os, orr;
    for (const auto& h : hits) {
        b.push_back(h.q);
        l.push_back(h.learned);
        os.push_back(h.oracle_selector);
        orr.push_back(h.oracle_router);
    }
    OracleReport r;
    r.rows = {{"baseline_q_only", hit_rate(b)},
              {"learned_router", hit_rate(l)},
              {"oracle_selector", hit_rate(os)},
              {"oracle_router", hit_rate(orr)}};
    r.routing_gap = r.rows[3].r_at_k - r.rows[1].r_at_k;
    r.selector_gap = r.rows[2].r_at_k - r.rows[1].r_at_k;
    return r;
}

// ---- ablations -------------------------------------------------------------

bool ne_heuristic_routes_union(const RouterFeatures& f) {
    return f.b_new_entity_count >= 1.0 && f.q_comparison_word == 0.0;
}

std::vector<AblationRow> run_ablations(const ExperimentContext& ctx, const Models& models) {
    check_context(ctx);
    const auto k = ctx.cfg.k;
    RouterConfig at_half = ctx.cfg;
    at_half.alpha = 0.5;
    at_half.alpha_mode = AlphaMode::frozen;
    RouterConfig at_quarter = ctx.cfg;
    at_quarter.alpha = 0.25;
    at_quarter.alpha_mode = AlphaMode::frozen;

    const auto routed_half = evaluate_all(ctx, models, at_half);
    const auto routed_quarter = evaluate_all(ctx, models, at_quarter);

    struct Hits {
        std::string id;
        bool full_bridge = false, unrouted = false, heuristic = false;
    };
    const auto& qs = ctx.ds->queries;
    auto extra = parallel_map(qs.size(), ctx.parallelism, [&](std::size_t i) {
        const auto& q = qs[i];
        const auto& bridge = ctx.ds->passage(q.bridge_id);
        Hits h;
        h.id = q.id;
        const auto sel = select(*ctx.analyzer, bridge, q.question, models.selector, ctx.cfg.abstain_threshold);
        const auto ps = pool_scores(q, *ctx.store, sel.text());

        std::vector<std::string> keys;
        for (const auto& id : q.pool_ids) keys.push_back(passage_key(id));
        const auto bridge_scores = score(*ctx.store, passage_key(q.bridge_id), EncoderMode::query, keys);
        h.full_bridge = recall_at_k(rank_candidates(ps.ids, fuse_scores(ps.q, bridge_scores, 0.5), k), q.gold_id, k);

        const bool hit_q = recall_at_k(rank_q(ps, k), q.gold_id, k);
        h.unrouted = sel.abstained() ? hit_q : recall_at_k(rank_fused(ps, 0.5, k), q.gold_id, k);

        const auto features = ctx.analyzer->router_features(q, sel.text(), bridge);
        const bool union_ = !sel.abstained() && ne_heuristic_routes_union(features);
        h.heuristic = union_ ? recall_at_k(rank_fused(ps, 0.25, k), q.gold_id, k) : hit_q;
        return h;
    });
    std::sort(extra.begin(), extra.end(), [](const Hits& a, const Hits& b) { return a.id < b.id; });

    std::vector<bool> q_only, full, unrouted, rhalf, rquarter, heur;
    for (std::size_t i = 0; i < extra.size(); ++i) {
        q_only.push_back(routed_quarter[i].hit_q);
        full.push_back(extra[i].full_bridge);
        unrouted.push_back(extra[i].unrouted);
        rhalf.push_back(routed_half[i].hit_routed);
        rquarter.push_back(routed_quarter[i].hit_routed);
        heur.push_back(extra[i].heuristic);
    }
    const double base = hit_rate(q_only);
    auto row = [&](std::string name, const std::vector<bool>& hits) {
        const double r = hit_rate(hits);
        return AblationRow{std::move(name), r, (r - base) * 100.0};
    };
    return {row("q_only", q_only),
            row("full_bridge_alpha_0.5", full),
            row("b_rel_unrouted_alpha_0.5", unrouted),
            row("routed_alpha_0.5", rhalf),
            row("routed_alpha_0.25", rquarter),
            row("ne_heuristic_alpha_0.25", heur)};
}

// ---- threshold sweep -------------------------------------------------------

std::vector<double> default_taus() { return {0.5, 0.55, 0.6, 0.65, 0.7, 0.75}; }

std::vector<SweepPoint> threshold_sweep(const ExperimentContext& ctx, const Models& models,
                                        std::span<const double> taus) {
    check_context(ctx);
    for (double t : taus) {
        if (!std::isfinite(t)) throw ConfigError("sweep thresholds must be finite");
    }
    const auto outcomes = evaluate_all(ctx, models, ctx.cfg);
    std::vector<SweepPoint> points;
    for (double tau : taus) {
        std::vector<bool> hits;
        std::size_t routed = 0;
        for (const auto& o : outcomes) {
            const bool union_ = !o.decision.selection.abstained() && o.decision.p_union >= tau;
            hits.push_back(union_ ? o.hit_union : o.hit_q);
            if (union_) ++routed;
        }
        SweepPoint p;
        p.tau = tau;
        p.r_at_k = hit_rate(hits);
        p.union_rate = outcomes.empty() ? 0.0 : static_cast<double>(routed) / static_cast<double>(outcomes.size());
        points.push_back(p);
    }
    return points;
}

// ---- synthetic calibration -------------------------------------------------

SyntheticCalibration synthetic_calibration(const SyntheticCalibrationConfig& cfg) {
    if (cfg.n < 3) throw ConfigError("synthetic calibration needs n >= 3");
    if (cfg.pool_size < 2) throw ConfigError("synthetic calibration needs a pool of at least 2");
    if (!(cfg.sigma > 0)) throw ConfigError("synthetic calibration needs sigma > 0");
    if (!(cfg.margin_spread >= 0)) throw ConfigError("margin spread must be non-negative");

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> margin(-cfg.margin_spread, cfg.margin_spread);
    std::normal_distribution<double> noise(0.0, cfg.sigma);

    SyntheticCalibration out;
    out.margins.reserve(cfg.n);
    out.aucs.reserve(cfg.n);
    std::vector<double> pool(cfg.pool_size);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        const double gold = margin(rng);
        for (auto& v : pool) v = noise(rng);
        out.margins.push_back(separation_margin(gold, pool));
        out.aucs.push_back(per_query_auc(gold, pool));
    }
    if (cfg.shuffle_pairing) std::shuffle(out.aucs.begin(), out.aucs.end(), rng);
    out.fit = calibration_fit(out.margins, out.aucs);
    return out;
}

// ---- calibration on real margins -------------------------------------------

namespace {

TypeCalibration calibrate_group(std::string name, std::span<const MarginRecord> group, SigmaMode mode,
                                double cantelli_t) {
    TypeCalibration tc;
    tc.qtype = std::move(name);
    tc.n = group.size();
    std::vector<SeparationMargin> margins;
    std::vector<double> aucs, predicted;
    for (const auto& m : group) {
        margins.push_back({m.s_q, m.sigma_pool, m.sigma_pool == 0});
        aucs.push_back(m.auc_q);
        predicted.push_back(predicted_auc(margins.back()));
    }
    if (group.size() >= 3) tc.fit = calibration_fit(margins, aucs, mode);
    if (group.size() >= 2) tc.kendall = kendall_tau(predicted, aucs);
    const double mu = mean(aucs);
    double ss = 0;
    for (double a : aucs) ss += (a - mu) * (a - mu);
    const double sd = aucs.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(aucs.size()));
    if (sd > 0) tc.cantelli = cantelli_check(aucs, sd, cantelli_t);
    return tc;
}

}  // namespace

std::vector<TypeCalibration> calibration_by_type(std::span<const MarginRecord> margins, SigmaMode mode,
                                                 double cantelli_t) {
    std::map<std::string, std::vector<MarginRecord>> groups;
    for (const auto& m : margins) groups[std::string(to_string(m.qtype))].push_back(m);
    std::vector<TypeCalibration> out;
    for (const auto& [name, group] : groups) out.push_back(calibrate_group(name, group, mode, cantelli_t));
    out.push_back(calibrate_group("all", margins, mode, cantelli_t));
    return out;
}

std::optional<double> type_mean_inversion_accuracy(std::span<const MarginRecord> margins) {
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& m : margins) {
        auto& g = groups[std::string(to_string(m.qtype))];
        g.first.push_back(predicted_auc({m.s_q, m.sigma_pool, m.sigma_pool == 0}));
        g.second.push_back(m.auc_q);
    }
    std::vector<std::pair<double, double>> means;
    for (const auto& [name, g] : groups) means.emplace_back(mean(g.first), mean(g.second));
    std::size_t agree = 0, compared = 0;
    for (std::size_t i = 0; i < means.size(); ++i) {
        for (std::size_t j = i + 1; j < means.size(); ++j) {
            const double dp = means[i].first - means[j].first;
            const double da = means[i].second - means[j].second;
            if (dp == 0 || da == 0) continue;
            ++compared;
            if ((dp > 0) == (da > 0)) ++agree;
        }
    }
    if (compared == 0) return std::nullopt;
    return static_cast<double>(agree) / static_cast<double>(compared);
}

// ---- regime assignment -----------------------------------------------------

RegimeAssignmentReport regime_assignment_eval(const TextAnalyzer& analyzer, const Dataset& ds,
                                              std::span<const MarginRecord> margins) {
    std::map<std::string, const MarginRecord*> by_id;
    for (const auto& m : margins) by_id[m.query_id] = &m;
    std::vector<std::string> predicate_labels, margin_labels;
    RegimeAssignmentReport r;
    std::vector<std::string> missing;
    for (const auto& q : ds.queries) {
        auto it = by_id.find(q.id);
        if (it == by_id.end()) {
            missing.push_back(q.id);
            continue;
        }
        const auto pa = analyzer.predicates(q, ds.passage(q.bridge_id));
        ++r.predicate_counts[std::string(to_string(pa.regime))];
        predicate_labels.emplace_back(pa.p1 ? "Q_dominant" : "B_dominant");
        margin_labels.emplace_back(it->second->delta_s() > 0 ? "Q_dominant" : "B_dominant");
    }
    if (!missing.empty()) throw IntegrityError("margins missing for some queries", missing);
    r.n = predicate_labels.size();
    if (r.n == 0) return r;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < r.n; ++i) agree += predicate_labels[i] == margin_labels[i];
    r.agreement = static_cast<double>(agree) / static_cast<double>(r.n);
    r.kappa = cohen_kappa(predicate_labels, margin_labels);
    return r;
}

double annotation_kappa(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<std::string> a, b;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            a.push_back(j.at("rater_a").get<std::string>());
            b.push_back(j.at("rater_b").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    }
    return cohen_kappa(a, b);
}

// ---- reports ---------------------------------------------------------------

std::string format_number(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

nlohmann::json to_json(const MarginRecord& m) {
    return {{"query_id", m.query_id},
            {"qtype", std::string(to_string(m.qtype))},
            {"s_q", m.s_q},
            {"s_b", m.s_b},
            {"delta_s", m.delta_s()},
            {"sigma_pool", m.sigma_pool},
            {"sigma_bridge", m.sigma_bridge},
            {"auc_q", m.auc_q},
            {"auc_b", m.auc_b},
            {"degenerate", m.degenerate}};
}

nlohmann::json to_json(const KnockoutSummary& k) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : k.records) {
        records.push_back({{"query_id", r.query_id},
                           {"qtype", std::string(to_string(r.qtype))},
                           {"auc_full", r.auc_full},
                           {"auc_rel", r.auc_rel},
                           {"auc_minus", r.auc_minus}});
    }
    return {{"records", records},
            {"n", k.records.size()},
            {"excluded_single_sentence", k.excluded_single_sentence},
            {"excluded_abstained", k.excluded_abstained},
            {"mean_full_minus", k.mean_full_minus},
            {"mean_minus_full", k.mean_minus_full},
            {"mean_full_rel", k.mean_full_rel},
            {"sign_test_full_vs_minus", to_json(k.sign_test_minus)},
            {"sign_test_full_vs_rel", to_json(k.sign_test_rel)}};
}

nlohmann::json to_json(const RegimeTable& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) {
        rows.push_back({{"qtype", r.qtype},
                        {"count", r.count},
                        {"prevalence", r.prevalence},
                        {"delta_q_minus_b", r.delta_q_minus_b},
                        {"delta_b_minus_q", -r.delta_q_minus_b},
                        {"verdict", r.verdict}});
    }
    nlohmann::json j{{"rows", rows},
                     {"aggregate_delta_q_minus_b", t.aggregate_delta},
                     {"aggregate_delta_b_minus_q", t.aggregate_delta_b_minus_q()},
                     {"verdict_epsilon", kRegimeVerdictEpsilon}};
    if (t.micro_delta) {
        j["micro_delta_q_minus_b"] = *t.micro_delta;
        j["micro_delta_b_minus_q"] = -*t.micro_delta;
    }
    return j;
}

nlohmann::json to_json(const EvalReport& r, std::size_t k) {
    nlohmann::json traces = nlohmann::json::array();
    for (const auto& o : r.outcomes) traces.push_back(trace_json(o));
    return {{"n", r.outcomes.size()},
            {"k", k},
            {"r_at_k_q_only", r.r_at_k_q},
            {"r_at_k_router", r.r_at_k_router},
            {"delta", r.delta},
            {"wins", r.wins},
            {"losses", r.losses},
            {"mcnemar", to_json(r.mcnemar)},
            {"routing_rate", r.routing_rate},
            {"queries", traces}};
}

nlohmann::json to_json(const OracleReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) rows.push_back({{"name", row.name}, {"r_at_k", row.r_at_k}});
    return {{"rows", rows}, {"routing_gap", r.routing_gap}, {"selector_gap", r.selector_gap}};
}

nlohmann::json to_json(std::span<const AblationRow> rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) out.push_back({{"condition", r.condition}, {"r_at_5", r.r_at_5}, {"delta_pp", r.delta_pp}});
    return out;
}

nlohmann::json to_json(std::span<const SweepPoint> points) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& p : points) out.push_back({{"tau", p.tau}, {"r_at_k", p.r_at_k}, {"union_rate", p.union_rate}});
    return out;
}

nlohmann::json to_json(const SyntheticCalibrationConfig& c) {
    return {{"n", c.n},
            {"pool_size", c.pool_size},
            {"sigma", c.sigma},
            {"margin_spread", c.margin_spread},
            {"seed", c.seed},
            {"shuffle_pairing", c.shuffle_pairing}};
}

nlohmann::json to_json(std::span<const TypeCalibration> rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j{{"qtype", r.qtype}, {"n", r.n}};
        j["fit"] = r.fit ? to_json(*r.fit) : nlohmann::json(nullptr);
        j["kendall"] = r.kendall ? to_json(*r.kendall) : nlohmann::json(nullptr);
        j["cantelli"] = r.cantelli ? to_json(*r.cantelli) : nlohmann::json(nullptr);
        out.push_back(j);
    }
    return out;
}

nlohmann::json to_json(const RegimeAssignmentReport& r) {
    return {{"n", r.n}, {"agreement", r.agreement}, {"kappa", r.kappa}, {"predicate_regimes", r.predicate_counts}};
}

CsvTable margins_csv(std::span<const MarginRecord> margins) {
    CsvTable t{{"query_id", "qtype", "s_q", "s_b", "delta_s", "sigma_pool", "sigma_bridge", "auc_q", "auc_b",
                "degenerate"},
               {}};
    for (const auto& m : margins) {
        t.rows.push_back({m.query_id, std::string(to_string(m.qtype)), format_number(m.s_q), format_number(m.s_b),
                          format_number(m.delta_s()), format_number(m.sigma_pool), format_number(m.sigma_bridge),
                          format_number(m.auc_q), format_number(m.auc_b), m.degenerate ? "1" : "0"});
    }
    return t;
}

CsvTable knockout_csv(const KnockoutSummary& k) {
    CsvTable t{{"query_id", "qtype", "auc_full", "auc_rel", "auc_minus"}, {}};
    for (const auto& r : k.records) {
        t.rows.push_back({r.query_id, std::string(to_string(r.qtype)), format_number(r.auc_full),
                          format_number(r.auc_rel), format_number(r.auc_minus)});
    }
    return t;
}

CsvTable regime_table_csv(const RegimeTable& t) {
    CsvTable c{{"qtype", "count", "prevalence", "delta_q_minus_b", "verdict"}, {}};
    for (const auto& r : t.rows) {
        c.rows.push_back({r.qtype, std::to_string(r.count), format_number(r.prevalence),
                          format_number(r.delta_q_minus_b), r.verdict});
    }
    return c;
}

CsvTable outcomes_csv(const EvalReport& r) {
    CsvTable t{{"query_id", "qtype", "p_union", "action", "alpha_used", "gold_rank_q", "gold_rank_union", "hit_q",
                "hit_routed"},
               {}};
    for (const auto& o : r.outcomes) {
        t.rows.push_back({o.query_id, std::string(to_string(o.qtype)), format_number(o.decision.p_union),
                          std::string(to_string(o.decision.action)), format_number(o.decision.alpha_used),
                          rank_field(o.rank_q), rank_field(o.rank_union), o.hit_q ? "1" : "0",
                          o.hit_routed ? "1" : "0"});
    }
    return t;
}

CsvTable oracle_csv(const OracleReport& r) {
    CsvTable t{{"row", "r_at_k"}, {}};
    for (const auto& row : r.rows) t.rows.push_back({row.name, format_number(row.r_at_k)});
    return t;
}

CsvTable ablation_csv(std::span<const AblationRow> rows) {
    CsvTable t{{"condition", "r_at_5", "delta_pp"}, {}};
    for (const auto& r : rows) t.rows.push_back({r.condition, format_number(r.r_at_5), format_number(r.delta_pp)});
    return t;
}

CsvTable sweep_csv(std::span<const SweepPoint> points) {
    CsvTable t{{"tau", "r_at_k", "union_rate"}, {}};
    for (const auto& p : points) {
        t.rows.push_back({format_number(p.tau), format_number(p.r_at_k), format_number(p.union_rate)});
    }
    return t;
}

CsvTable synthetic_csv(const SyntheticCalibration& s) {
    CsvTable t{{"margin", "sigma", "predicted_auc", "auc"}, {}};
    for (std::size_t i = 0; i < s.margins.size(); ++i) {
        t.rows.push_back({format_number(s.margins[i].margin), format_number(s.margins[i].sigma),
                          format_number(predicted_auc(s.margins[i])), format_number(s.aucs[i])});
    }
    return t;
}

CsvTable calibration_csv(std::span<const TypeCalibration> rows) {
    CsvTable t{{"qtype", "n", "r_squared", "inversion_accuracy", "kendall_tau", "kendall_p"}, {}};
    for (const auto& r : rows) {
        t.rows.push_back({r.qtype, std::to_string(r.n), r.fit ? format_number(r.fit->r_squared) : "",
                          r.fit ? format_number(r.fit->inversion_accuracy) : "",
                          r.kendall ? format_number(r.kendall->tau) : "",
                          r.kendall ? format_number(r.kendall->p_value) : ""});
    }
    return t;
}

std::string config_hash(const nlohmann::json& effective_config) {
    return sha256_hex(effective_config.dump()).substr(0, 12);
}

WrittenReport write_report(const std::filesystem::path& out_dir, const ExperimentReport& report,
                           const std::string& dataset_name, const nlohmann::json& effective_config,
                           const RouterConfig& cfg, bool deterministic) {
    std::filesystem::create_directories(out_dir);
    const auto hash = config_hash(effective_config);
    const auto dataset = dataset_name.empty() ? std::string("none") : dataset_name;
    const auto stem = report.experiment + "_" + dataset + "_" + hash;

    nlohmann::json doc{{"experiment", report.experiment},
                       {"dataset", dataset},
                       {"config_hash", hash},
                       {"effective_config", effective_config},
                       {"frozen_rule",
                        {{"alpha", cfg.alpha},
                         {"tau", cfg.tau},
                         {"alpha_mode", std::string(to_string(cfg.alpha_mode))},
                         {"rule", "Union iff p_union >= tau; fused score = (1 - alpha) * s_q + alpha * s_brel"}}},
                       {"results", report.body}};
    if (!deterministic) {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        std::ostringstream ts;
        ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
        doc["generated_at"] = ts.str();
    }

    WrittenReport w{out_dir / (stem + ".json"), out_dir / (stem + ".csv")};
    {
        std::ofstream out(w.json_path, std::ios::binary);
        if (!out) throw Error("cannot write " + w.json_path.string());
        out << doc.dump(2) << '\n';
    }
    {
        std::ofstream out(w.csv_path, std::ios::binary);
        if (!out) throw Error("cannot write " + w.csv_path.string());
        auto write_row = [&](const std::vector<std::string>& row) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out << ',';
                out << csv_field(row[i]);
            }
            out << '\n';
        };
        write_row(report.csv.header);
        for (const auto& row : report.csv.rows) write_row(row);
    }
    return w;
}

}  // namespace regime
