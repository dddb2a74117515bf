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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "regime/corpus.hpp"
#include "regime/embedding_store.hpp"
#include "regime/linear_model.hpp"
#include "regime/router.hpp"
#include "regime/stats.hpp"
#include "regime/text_analysis.hpp"

namespace regime {

/// Trained artifacts shared by every evaluation.
struct Models {
    LinearModel selector;
    LinearModel router;
    /// Out-of-fold P(Union) by query id. When present it replaces the router's
    /// in-sample probability.
    std::optional<std::map<std::string, double>> oof_p_union;
};

struct ExperimentContext {
    const TextAnalyzer* analyzer = nullptr;
    const Dataset* ds = nullptr;
    const VectorStore* store = nullptr;
    RouterConfig cfg;
    std::size_t parallelism = 1;
};

/// Text handed to the encoder for a passage: title and body on separate lines,
/// or the body alone when the title is empty.
std::string embedding_text(const Passage& p);

/// Bridge body with [begin, end) removed and whitespace collapsed.
std::string remove_span(std::string_view body, std::size_t begin, std::size_t end);

/// A text some run needs, with the key and mode it is stored under.
struct RequiredText {
    std::string key;
    EncoderMode mode = EncoderMode::query;
    std::string text;

    bool operator<(const RequiredText& o) const { return std::tie(key, mode) < std::tie(o.key, o.mode); }
};

/// Everything the experiments read from the store: questions, pool and gold
/// passages, bridges as queries, oracle sentences and, given a selector,
/// selected sentences and knockout minus-variants. Sorted by (key, mode), no
/// duplicates.
std::vector<RequiredText> required_texts(const TextAnalyzer& analyzer, const Dataset& ds,
                                         const LinearModel* selector_model, double abstain_threshold = 0.0);

// ---- margins -------------------------------------------------------------

struct MarginRecord {
    std::string query_id;
    QueryType qtype = QueryType::other;
    double s_q = 0;            // question margin
    double s_b = 0;            // full-bridge margin
    double sigma_pool = 0;     // pool stddev under the question encoder
    double sigma_bridge = 0;   // pool stddev under the bridge-as-query encoder
    double auc_q = 0;
    double auc_b = 0;
    bool degenerate = false;

    double delta_s() const noexcept { return s_q - s_b; }
};

/// Gold is scored separately; the pool used for margins and AUC excludes it.
/// Records are sorted by query id.
std::vector<MarginRecord> compute_margins(const ExperimentContext& ctx);

// ---- knockout ------------------------------------------------------------

struct KnockoutRecord {
    std::string query_id;
    QueryType qtype = QueryType::other;
    double auc_full = 0;
    double auc_rel = 0;
    double auc_minus = 0;
};

struct KnockoutSummary {
    std::vector<KnockoutRecord> records;
    std::size_t excluded_single_sentence = 0;
    std::size_t excluded_abstained = 0;
    double mean_full_minus = 0;   // mean(auc_full - auc_minus)
    double mean_full_rel = 0;     // mean(auc_full - auc_rel)
    double mean_minus_full = 0;   // reported sign convention: minus - full
    McNemarResult sign_test_minus;  // positive vs negative per-query (full - minus)
    McNemarResult sign_test_rel;
};

KnockoutSummary run_knockout(const ExperimentContext& ctx, const LinearModel& selector_model);

// ---- mixture decomposition -----------------------------------------------

struct TypeAucRecord {
    QueryType qtype = QueryType::other;
    double auc_q = 0;
    double auc_b = 0;
};

struct RegimeRow {
    std::string qtype;
    std::size_t count = 0;
    double prevalence = 0;
    double delta_q_minus_b = 0;
    std::string verdict;  // Q_dominant, B_dominant or neutral
};

struct RegimeTable {
    std::vector<RegimeRow> rows;   // descending prevalence, then type name
    double aggregate_delta = 0;    // sum of prevalence * delta, Q minus B
    std::optional<double> micro_delta;  // pooled AUC difference, Q minus B

    double aggregate_delta_b_minus_q() const noexcept { return -aggregate_delta; }
};

inline constexpr double kRegimeVerdictEpsilon = 0.01;

std::string regime_verdict(double delta_q_minus_b);

RegimeTable mixture_decomposition(std::span<const TypeAucRecord> per_query);

/// Same identity from published per-type rows (prevalence and delta given).
RegimeTable mixture_decomposition(std::vector<RegimeRow> rows);

/// AUC of every gold score against every distractor score across queries.
double micro_auc(std::span<const double> gold_scores, std::span<const double> distractor_scores);

/// Mixture table from margins, with the pooled micro delta filled in.
RegimeTable mixture_from_margins(const ExperimentContext& ctx, std::span<const MarginRecord> margins);

// ---- main evaluation -----------------------------------------------------

struct EvalReport {
    std::vector<QueryOutcome> outcomes;  // sorted by query id
    double r_at_k_q = 0;
    double r_at_k_router = 0;
    double delta = 0;
    std::size_t wins = 0;    // router hits, Q misses
    std::size_t losses = 0;  // Q hits, router misses
    McNemarResult mcnemar;
    double routing_rate = 0;  // fraction sent to Union
};

EvalReport run_main_eval(const ExperimentContext& ctx, const Models& models);

// ---- oracle analysis -----------------------------------------------------

struct OracleRow {
    std::string name;
    double r_at_k = 0;
};

struct OracleReport {
    std::vector<OracleRow> rows;  // baseline, learned, oracle_selector, oracle_router
    double routing_gap = 0;       // oracle_router - learned
    double selector_gap = 0;      // oracle_selector - learned
};

OracleReport run_oracle_analysis(const ExperimentContext& ctx, const Models& models);

// ---- ablations -----------------------------------------------------------

struct AblationRow {
    std::string condition;
    double r_at_5 = 0;
    double delta_pp = 0;  // percentage points over question-only
};

/// Question-only; full bridge at 0.5; unrouted B_rel at 0.5; routed at 0.5;
/// routed at 0.25; entity-count heuristic router at 0.25.
std::vector<AblationRow> run_ablations(const ExperimentContext& ctx, const Models& models);

/// Union iff the selected sentence introduces a new entity and the question has no comparison word.
bool ne_heuristic_routes_union(const RouterFeatures& f);

// ---- threshold sweep -----------------------------------------------------

struct SweepPoint {
    double tau = 0;
    double r_at_k = 0;
    double union_rate = 0;
};

std::vector<double> default_taus();

/// Routes every query once and re-thresholds. A tau above every probability
/// yields the question-only run, tau = 0 the unrouted Union run.
std::vector<SweepPoint> threshold_sweep(const ExperimentContext& ctx, const Models& models,
                                        std::span<const double> taus);

// ---- synthetic calibration -----------------------------------------------

struct SyntheticCalibrationConfig {
    std::size_t n = 10000;
    std::size_t pool_size = 200;
    double sigma = 0.1;
    double margin_spread = 0.5;  // true margins ~ U(-spread, spread)
    std::uint64_t seed = 7;
    bool shuffle_pairing = false;  // destroys the margin/AUC link
};

struct SyntheticCalibration {
    CalibrationFit fit;
    std::vector<SeparationMargin> margins;
    std::vector<double> aucs;
};

SyntheticCalibration synthetic_calibration(const SyntheticCalibrationConfig& cfg);

// ---- calibration on real margins -----------------------------------------

struct TypeCalibration {
    std::string qtype;  // "all" for the pooled row
    std::size_t n = 0;
    std::optional<CalibrationFit> fit;  // absent below three queries
    std::optional<KendallResult> kendall;
    std::optional<CantelliResult> cantelli;
};

/// Per-type and pooled fit of phi(S/sigma) to the question-side AUC.
std::vector<TypeCalibration> calibration_by_type(std::span<const MarginRecord> margins, SigmaMode mode,
                                                 double cantelli_t = 0.9);

/// Inversion accuracy over type means: sign agreement of predicted and observed
/// mean-AUC differences between types.
std::optional<double> type_mean_inversion_accuracy(std::span<const MarginRecord> margins);

// ---- regime assignment ---------------------------------------------------

struct RegimeAssignmentReport {
    std::size_t n = 0;
    double agreement = 0;
    double kappa = 0;
    std::map<std::string, std::size_t> predicate_counts;  // by three-way regime
};

/// Predicate regime (P1 -> Q_dominant, else B_dominant) against the margin
/// label (delta S > 0 -> Q_dominant, else B_dominant).
RegimeAssignmentReport regime_assignment_eval(const TextAnalyzer& analyzer, const Dataset& ds,
                                              std::span<const MarginRecord> margins);

/// Two-rater kappa for a JSONL file of {"id","rater_a","rater_b"} lines.
double annotation_kappa(const std::filesystem::path& path);

// ---- reports -------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct ExperimentReport {
    std::string experiment;
    nlohmann::json body;
    CsvTable csv;
};

nlohmann::json to_json(const MarginRecord& m);
nlohmann::json to_json(const KnockoutSummary& k);
nlohmann::json to_json(const RegimeTable& t);
nlohmann::json to_json(const EvalReport& r, std::size_t k);
nlohmann::json to_json(const OracleReport& r);
nlohmann::json to_json(std::span<const AblationRow> rows);
nlohmann::json to_json(std::span<const SweepPoint> points);
nlohmann::json to_json(const SyntheticCalibrationConfig& c);
nlohmann::json to_json(std::span<const TypeCalibration> rows);
nlohmann::json to_json(const RegimeAssignmentReport& r);

CsvTable margins_csv(std::span<const MarginRecord> margins);
CsvTable knockout_csv(const KnockoutSummary& k);
CsvTable regime_table_csv(const RegimeTable& t);
CsvTable outcomes_csv(const EvalReport& r);
CsvTable oracle_csv(const OracleReport& r);
CsvTable ablation_csv(std::span<const AblationRow> rows);
CsvTable sweep_csv(std::span<const SweepPoint> points);
CsvTable synthetic_csv(const SyntheticCalibration& s);
CsvTable calibration_csv(std::span<const TypeCalibration> rows);

/// Formats a double with 17 significant digits so CSV round-trips exactly.
std::string format_number(double v);

/// First 12 hex digits of SHA-256 over the compact JSON dump.
std::string config_hash(const nlohmann::json& effective_config);

struct WrittenReport {
    std::filesystem::path json_path;
    std::filesystem::path csv_path;
};

/// Writes <experiment>_<dataset>_<hash>.json and .csv under out_dir. The JSON
/// carries the effective config, the frozen-rule banner and, unless
/// deterministic, a generated_at timestamp.
WrittenReport write_report(const std::filesystem::path& out_dir, const ExperimentReport& report,
                           const std::string& dataset_name, const nlohmann::json& effective_config,
                           const RouterConfig& cfg, bool deterministic);

}  // namespace regime
