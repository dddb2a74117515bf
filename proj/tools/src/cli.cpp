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

#include "regime/cli/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "regime/cli/run_config.hpp"
#include "regime/corpus.hpp"
#include "regime/embedding_store.hpp"
#include "regime/errors.hpp"
#include "regime/experiments.hpp"
#include "regime/linear_model.hpp"
#include "regime/router.hpp"
#include "regime/selector.hpp"
#include "regime/text_analysis.hpp"

namespace regime::cli {

namespace {

// Values given on the command line. Unset members leave the config untouched.
struct Flags {
    std::string config;
    std::optional<std::string> dataset_name, queries, passages, selector, router, oof, annotations, lexicons,
        embed_cache, output_dir, alpha_mode, label_mode;
    std::vector<std::string> vectors;
    std::optional<double> alpha, tau, abstain_threshold, l2;
    std::optional<std::size_t> k, folds, parallelism;
    bool deterministic = false;

    // ingest
    std::string hop1_ranks;
    // embed
    bool dry_run = false;
    std::string store_out;
    // eval / experiment
    bool use_oof = false;
    std::string trace;
    std::string experiment;
    std::size_t n = 10000, pool_size = 200;
    double sigma = 0.1, margin_spread = 0.5, cantelli_t = 0.9;
    std::uint64_t seed = 7;
    bool shuffle = false;
    std::vector<double> taus;
    std::string sigma_mode = "per_query";
    std::string kappa_file;
    // report
    std::vector<std::string> inputs;
    std::string report_out;
};

void add_common(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "JSON config file; command-line flags take precedence");
    app->add_option("--dataset-name", f.dataset_name, "Dataset name used in report file names");
    app->add_option("--queries", f.queries, "queries.jsonl");
    app->add_option("--passages", f.passages, "passages.jsonl");
    app->add_option("--vectors", f.vectors, "Vector store file(s)");
    app->add_option("--selector", f.selector, "Selector model artifact (default <output-dir>/selector.json)");
    app->add_option("--router", f.router, "Router model artifact (default <output-dir>/router.json)");
    app->add_option("--oof", f.oof, "Out-of-fold probabilities (default <output-dir>/oof.jsonl)");
    app->add_option("--annotations", f.annotations, "Selector annotations JSONL");
    app->add_option("--lexicons", f.lexicons, "Directory of lexicon files");
    app->add_option("--embed-cache", f.embed_cache, "Embedding cache file");
    app->add_option("--output-dir", f.output_dir, "Directory for artifacts and reports (default out)");
    app->add_option("--alpha", f.alpha, "Fusion weight of the B_rel score (default 0.25)");
    app->add_option("--tau", f.tau, "Routing threshold on P(Union) (default 0.5)");
    app->add_option("--alpha-mode", f.alpha_mode, "frozen or p_weighted (default frozen)");
    app->add_option("--k", f.k, "Recall cutoff (default 5)");
    app->add_option("--label-mode", f.label_mode, "strict_recall or rank_gain (default strict_recall)");
    app->add_option("--abstain-threshold", f.abstain_threshold, "Selector abstention threshold (default 0, off)");
    app->add_option("--l2", f.l2, "L2 penalty for logistic regression (default 1.0)");
    app->add_option("--folds", f.folds, "Cross-fitting folds (default 5)");
    app->add_option("--parallelism", f.parallelism, "Worker threads (default 1)");
    app->add_flag("--deterministic", f.deterministic, "Omit the timestamp from reports");
}

RunConfig build_config(const Flags& f) {
    RunConfig cfg;
    if (!f.config.empty()) apply_config_file(cfg, f.config);
    if (f.dataset_name) cfg.dataset_name = *f.dataset_name;
    if (f.queries) cfg.queries = *f.queries;
    if (f.passages) cfg.passages = *f.passages;
    if (!f.vectors.empty()) cfg.vectors.assign(f.vectors.begin(), f.vectors.end());
    if (f.selector) cfg.selector_model = *f.selector;
    if (f.router) cfg.router_model = *f.router;
    if (f.oof) cfg.oof = *f.oof;
    if (f.annotations) cfg.annotations = *f.annotations;
    if (f.lexicons) cfg.lexicon_dir = *f.lexicons;
    if (f.embed_cache) cfg.embed_cache = *f.embed_cache;
    if (f.output_dir) cfg.output_dir = *f.output_dir;
    if (f.alpha) cfg.router.alpha = *f.alpha;
    if (f.tau) cfg.router.tau = *f.tau;
    if (f.alpha_mode) cfg.router.alpha_mode = parse_alpha_mode(*f.alpha_mode);
    if (f.k) cfg.router.k = *f.k;
    if (f.label_mode) cfg.router.label_mode = parse_label_mode(*f.label_mode);
    if (f.abstain_threshold) cfg.router.abstain_threshold = *f.abstain_threshold;
    if (f.l2) cfg.train.l2_penalty = *f.l2;
    if (f.folds) cfg.folds = *f.folds;
    if (f.parallelism) cfg.parallelism = *f.parallelism;
    validate(cfg);
    return cfg;
}

TextAnalyzer make_analyzer(const RunConfig& cfg) {
    return TextAnalyzer(cfg.lexicon_dir.empty() ? Lexicons::defaults() : Lexicons::from_directory(cfg.lexicon_dir));
}

Dataset load(const RunConfig& cfg) {
    if (cfg.queries.empty() || cfg.passages.empty()) {
        throw ConfigError("dataset paths are required (--queries and --passages, or dataset in the config file)");
    }
    auto ds = load_dataset({cfg.queries, cfg.passages});
    if (!cfg.dataset_name.empty()) ds.name = cfg.dataset_name;
    if (ds.name.empty()) ds.name = cfg.queries.stem().string();
    return ds;
}

VectorStore load_store(const RunConfig& cfg) {
    if (cfg.vectors.empty()) throw ConfigError("no vector store given (--vectors or vectors in the config file)");
    return load_vectors(cfg.vectors);
}

std::map<std::string, double> load_oof(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open out-of-fold file " + path.string());
    std::map<std::string, double> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            out[j.at("id").get<std::string>()] = j.at("p_union").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
    }
    return out;
}

Models load_models(const RunConfig& cfg, bool use_oof) {
    Models m;
    m.selector = load_model(cfg.selector_path());
    m.router = load_model(cfg.router_path());
    if (use_oof) m.oof_p_union = load_oof(cfg.oof_path());
    return m;
}

void print_written(std::ostream& out, const WrittenReport& w) {
    out << "report: " << w.json_path.generic_string() << '\n';
    out << "csv: " << w.csv_path.generic_string() << '\n';
}

// ---- commands ----------------------------------------------------------------

int cmd_ingest(const RunConfig& cfg, const Flags& f, std::ostream& out, std::ostream&) {
    auto ds = load(cfg);
    if (!f.hop1_ranks.empty()) {
        const auto before = ds.queries.size();
        ds = filter_hop1_correct(ds, load_hop1_ranks(f.hop1_ranks));
        out << "hop1 filter: kept " << ds.queries.size() << " of " << before << '\n';
    }
    out << "dataset: " << ds.name << '\n';
    out << "queries: " << ds.queries.size() << '\n';
    out << "passages: " << ds.passages.size() << '\n';
    std::map<std::string, std::size_t> types;
    for (const auto& q : ds.queries) ++types[std::string(to_string(q.qtype))];
    for (const auto& [type, count] : types) out << "qtype " << type << ": " << count << '\n';
    return kOk;
}

int cmd_embed(const RunConfig& cfg, const Flags& f, std::ostream& out, std::ostream& err, const Environment& env) {
    const auto ds = load(cfg);
    const auto analyzer = make_analyzer(cfg);
    VectorStore store;
    std::vector<std::filesystem::path> existing;
    for (const auto& p : cfg.vectors) {
        if (std::filesystem::exists(p)) existing.push_back(p);
    }
    if (!existing.empty()) store = load_vectors(existing);

    std::optional<LinearModel> selector;
    if (std::filesystem::exists(cfg.selector_path())) {
        selector = load_model(cfg.selector_path());
    } else {
        err << "warning: no selector artifact at " << cfg.selector_path().generic_string()
            << "; selected sentences and knockout variants are not included\n";
    }
    const auto required =
        required_texts(analyzer, ds, selector ? &*selector : nullptr, cfg.router.abstain_threshold);
    std::vector<RequiredText> missing;
    for (const auto& r : required) {
        if (!store.contains(r.key, r.mode)) missing.push_back(r);
    }
    out << "required: " << required.size() << '\n';
    out << "missing: " << missing.size() << '\n';
    if (f.dry_run || missing.empty()) return kOk;

    if (!cfg.provider) throw ConfigError("embedding provider is not configured (provider section of the config file)");
    auto transport = env.transport ? env.transport : std::make_shared<HttpTransport>();
    std::optional<std::filesystem::path> cache;
    if (!cfg.embed_cache.empty()) cache = cfg.embed_cache;
    EmbedClient client(*cfg.provider, transport, cache);

    std::optional<VectorStore::Builder> builder;
    if (store.size() > 0) builder.emplace(store);
    for (auto mode : {EncoderMode::query, EncoderMode::doc}) {
        std::vector<std::string> texts;
        std::vector<std::string> keys;
        for (const auto& r : missing) {
            if (r.mode != mode) continue;
            texts.push_back(r.text);
            keys.push_back(r.key);
        }
        if (texts.empty()) continue;
        auto vectors = client.fetch(texts, mode);
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            if (!builder) builder.emplace(static_cast<std::uint32_t>(vectors[i].size()));
            builder->add(keys[i], mode, std::move(vectors[i]));
        }
    }
    const auto stats = client.stats();
    for (const auto& w : stats.warnings) err << "warning: " << w << '\n';
    std::filesystem::path target = !f.store_out.empty() ? std::filesystem::path(f.store_out)
                                   : !cfg.vectors.empty() ? cfg.vectors.front()
                                                          : cfg.output_dir / "vectors.rgv";
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    save_vectors(std::move(*builder).build(), target);
    out << "fetched: " << stats.fetched << '\n';
    out << "cache hits: " << stats.cache_hits << '\n';
    out << "requests: " << stats.requests << '\n';
    out << "store: " << target.generic_string() << '\n';
    return kOk;
}

int cmd_train(const RunConfig& cfg, const Flags&, std::ostream& out, std::ostream& err) {
    const auto ds = load(cfg);
    const auto store = load_store(cfg);
    const auto analyzer = make_analyzer(cfg);
    std::filesystem::create_directories(cfg.output_dir);

    LinearModel selector;
    if (!cfg.annotations.empty() && std::filesystem::exists(cfg.annotations)) {
        const auto annotated = load_annotations(cfg.annotations, ds);
        selector = train_selector(analyzer, annotated, cfg.train);
        auto path = cfg.selector_path();
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        save_model(selector, path);
        out << "selector: trained on " << annotated.size() << " passages, in-sample accuracy "
            << format_number(selector_accuracy(analyzer, selector, annotated)) << '\n';
        out << "selector artifact: " << path.generic_string() << '\n';
    } else if (std::filesystem::exists(cfg.selector_path())) {
        err << "warning: no annotations; skipping selector training and using "
            << cfg.selector_path().generic_string() << '\n';
        selector = load_model(cfg.selector_path());
    } else {
        throw ConfigError("selector training needs --annotations or an existing selector artifact");
    }

    const auto training =
        train_router(analyzer, ds, store, selector, cfg.router, cfg.train, cfg.folds, cfg.parallelism);
    out << "fold sizes:";
    for (const auto& [b, e] : training.fit.folds) out << ' ' << (e - b);
    out << '\n';
    std::size_t positives = 0;
    for (const auto& ex : training.examples) positives += ex.label == 1;
    out << "router labels: " << positives << " Union of " << training.examples.size() << '\n';

    const auto router_path = cfg.router_path();
    if (router_path.has_parent_path()) std::filesystem::create_directories(router_path.parent_path());
    save_model(training.fit.full_model, router_path);
    out << "router artifact: " << router_path.generic_string() << '\n';

    const auto oof_path = cfg.oof_path();
    if (oof_path.has_parent_path()) std::filesystem::create_directories(oof_path.parent_path());
    std::ofstream oof(oof_path, std::ios::binary);
    if (!oof) throw Error("cannot write " + oof_path.string());
    for (std::size_t i = 0; i < training.examples.size(); ++i) {
        oof << nlohmann::json{{"id", training.examples[i].query_id},
                              {"fold", training.fit.fold_of[i]},
                              {"p_union", training.fit.out_of_fold_probs[i]},
                              {"label", training.examples[i].label}}
                   .dump()
            << '\n';
    }
    out << "out-of-fold: " << oof_path.generic_string() << '\n';
    return kOk;
}

ExperimentContext context(const RunConfig& cfg, const TextAnalyzer& analyzer, const Dataset& ds,
                          const VectorStore& store) {
    ExperimentContext ctx;
    ctx.analyzer = &analyzer;
    ctx.ds = &ds;
    ctx.store = &store;
    ctx.cfg = cfg.router;
    ctx.parallelism = cfg.parallelism;
    return ctx;
}

int cmd_eval(const RunConfig& cfg, const Flags& f, std::ostream& out, std::ostream&) {
    const auto ds = load(cfg);
    const auto store = load_store(cfg);
    const auto analyzer = make_analyzer(cfg);
    const auto models = load_models(cfg, f.use_oof);
    const auto ctx = context(cfg, analyzer, ds, store);
    const auto report = run_main_eval(ctx, models);

    auto effective = effective_config(cfg);
    effective["use_oof"] = f.use_oof;
    const auto written = write_report(cfg.output_dir, {"main_eval", to_json(report, cfg.router.k), outcomes_csv(report)},
                                      ds.name, effective, cfg.router, f.deterministic);
    const auto trace_path = !f.trace.empty() ? std::filesystem::path(f.trace)
                                             : cfg.output_dir / ("trace_" + ds.name + "_" + config_hash(effective) + ".jsonl");
    if (trace_path.has_parent_path()) std::filesystem::create_directories(trace_path.parent_path());
    std::ofstream trace(trace_path, std::ios::binary);
    if (!trace) throw Error("cannot write " + trace_path.string());
    for (const auto& o : report.outcomes) trace << trace_json(o).dump() << '\n';

    out << "queries: " << report.outcomes.size() << '\n';
    out << "R@" << cfg.router.k << " question-only: " << format_number(report.r_at_k_q) << '\n';
    out << "R@" << cfg.router.k << " routed: " << format_number(report.r_at_k_router) << '\n';
    out << "wins/losses: " << report.wins << '/' << report.losses << '\n';
    out << "mcnemar exact p: " << format_number(report.mcnemar.p_exact) << '\n';
    out << "routing rate: " << format_number(report.routing_rate) << '\n';
    print_written(out, written);
    out << "trace: " << trace_path.generic_string() << '\n';
    return kOk;
}

SigmaMode parse_sigma_mode(const std::string& s) {
    if (s == "per_query") return SigmaMode::per_query;
    if (s == "global") return SigmaMode::global;
    throw ConfigError("unknown sigma mode \"" + s + "\" (expected per_query or global)");
}

int cmd_experiment(const RunConfig& cfg, const Flags& f, std::ostream& out, std::ostream& err) {
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), f.experiment) == names.end()) {
        err << "unknown experiment \"" << f.experiment << "\"; valid names:";
        for (const auto& n : names) err << ' ' << n;
        err << '\n';
        return kParseError;
    }

    if (f.experiment == "synthetic-calibration") {
        SyntheticCalibrationConfig sc;
        sc.n = f.n;
        sc.pool_size = f.pool_size;
        sc.sigma = f.sigma;
        sc.margin_spread = f.margin_spread;
        sc.seed = f.seed;
        sc.shuffle_pairing = f.shuffle;
        const auto result = synthetic_calibration(sc);
        auto body = to_json(result.fit);
        body["config"] = to_json(sc);
        const auto written = write_report(cfg.output_dir, {"synthetic_calibration", body, synthetic_csv(result)},
                                          "synthetic", nlohmann::json{{"synthetic", to_json(sc)}}, cfg.router,
                                          f.deterministic);
        out << body.dump(2) << '\n';
        print_written(out, written);
        return kOk;
    }

    const auto ds = load(cfg);
    const auto store = load_store(cfg);
    const auto analyzer = make_analyzer(cfg);
    const auto ctx = context(cfg, analyzer, ds, store);
    auto effective = effective_config(cfg);
    effective["experiment"] = f.experiment;

    ExperimentReport report;
    if (f.experiment == "margins" || f.experiment == "mixture" || f.experiment == "calibration" ||
        f.experiment == "regime-assignment") {
        const auto margins = compute_margins(ctx);
        if (f.experiment == "margins") {
            nlohmann::json records = nlohmann::json::array();
            for (const auto& m : margins) records.push_back(to_json(m));
            report = {"margins", {{"records", records}}, margins_csv(margins)};
        } else if (f.experiment == "mixture") {
            const auto table = mixture_from_margins(ctx, margins);
            report = {"mixture_decomposition", to_json(table), regime_table_csv(table)};
        } else if (f.experiment == "calibration") {
            effective["sigma_mode"] = f.sigma_mode;
            effective["cantelli_t"] = f.cantelli_t;
            const auto rows = calibration_by_type(margins, parse_sigma_mode(f.sigma_mode), f.cantelli_t);
            nlohmann::json body{{"by_type", to_json(rows)}};
            const auto type_means = type_mean_inversion_accuracy(margins);
            body["inversion_accuracy_within_pairs"] = rows.back().fit ? nlohmann::json(rows.back().fit->inversion_accuracy)
                                                                      : nlohmann::json(nullptr);
            body["inversion_accuracy_type_means"] = type_means ? nlohmann::json(*type_means) : nlohmann::json(nullptr);
            report = {"calibration", body, calibration_csv(rows)};
        } else {
            const auto r = regime_assignment_eval(analyzer, ds, margins);
            auto body = to_json(r);
            if (!f.kappa_file.empty()) {
                effective["kappa_file"] = f.kappa_file;
                body["annotation_kappa"] = annotation_kappa(f.kappa_file);
            }
            report = {"regime_assignment", body, margins_csv(margins)};
        }
    } else if (f.experiment == "knockout") {
        const auto selector = load_model(cfg.selector_path());
        const auto k = run_knockout(ctx, selector);
        report = {"knockout", to_json(k), knockout_csv(k)};
    } else {
        effective["use_oof"] = f.use_oof;
        const auto models = load_models(cfg, f.use_oof);
        if (f.experiment == "main-eval") {
            const auto r = run_main_eval(ctx, models);
            report = {"main_eval", to_json(r, cfg.router.k), outcomes_csv(r)};
        } else if (f.experiment == "oracle") {
            const auto r = run_oracle_analysis(ctx, models);
            report = {"oracle_analysis", to_json(r), oracle_csv(r)};
        } else if (f.experiment == "ablations") {
            const auto rows = run_ablations(ctx, models);
            report = {"ablations", to_json(rows), ablation_csv(rows)};
        } else if (f.experiment == "threshold-sweep") {
            const auto taus = f.taus.empty() ? default_taus() : f.taus;
            effective["taus"] = taus;
            const auto points = threshold_sweep(ctx, models, taus);
            report = {"threshold_sweep", to_json(points), sweep_csv(points)};
        }
    }
    const auto written = write_report(cfg.output_dir, report, ds.name, effective, cfg.router, f.deterministic);
    print_written(out, written);
    return kOk;
}

void print_scalars(std::ostream& out, const nlohmann::json& j, const std::string& prefix, int depth) {
    for (const auto& [key, value] : j.items()) {
        const auto name = prefix.empty() ? key : prefix + "." + key;
        if (value.is_number() || value.is_boolean() || value.is_string()) {
            out << "  " << name << ": " << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
        } else if (value.is_object() && depth > 0) {
            print_scalars(out, value, name, depth - 1);
        }
    }
}

int cmd_report(const Flags& f, std::ostream& out) {
    if (f.inputs.empty()) throw ConfigError("report needs at least one report JSON file");
    std::ostringstream text;
    for (const auto& input : f.inputs) {
        std::ifstream in(input);
        if (!in) throw ConfigError("cannot open report " + input);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(input, 0, e.what());
        }
        text << "== " << doc.value("experiment", std::string("?")) << " on " << doc.value("dataset", std::string("?"))
             << " [" << doc.value("config_hash", std::string("?")) << "]\n";
        if (doc.contains("frozen_rule")) {
            const auto& r = doc["frozen_rule"];
            text << "  rule: alpha=" << r.value("alpha", 0.0) << " tau=" << r.value("tau", 0.0)
                 << " alpha_mode=" << r.value("alpha_mode", std::string("?")) << '\n';
        }
        const auto& results = doc["results"];
        if (results.is_object()) {
            print_scalars(text, results, "", 1);
        } else if (results.is_array()) {
            for (const auto& row : results) {
                text << "  -";
                for (const auto& [key, value] : row.items()) {
                    text << ' ' << key << '=' << (value.is_string() ? value.get<std::string>() : value.dump());
                }
                text << '\n';
            }
        }
    }
    out << text.str();
    if (!f.report_out.empty()) {
        std::ofstream file(f.report_out, std::ios::binary);
        if (!file) throw Error("cannot write " + f.report_out);
        file << text.str();
    }
    return kOk;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"main-eval",   "knockout",    "oracle",   "ablations",
                                                "threshold-sweep", "synthetic-calibration", "mixture",
                                                "regime-assignment", "calibration", "margins"};
    return names;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Environment& env) {
    CLI::App app{"Regime-aware query routing for two-hop retrieval"};
    app.name("regime");
    app.require_subcommand(1);
    Flags f;

    auto* ingest = app.add_subcommand("ingest", "Validate dataset files and print counts");
    add_common(ingest, f);
    ingest->add_option("--hop1-ranks", f.hop1_ranks, "Keep only queries whose bridge ranked in the hop-1 top five");

    auto* embed = app.add_subcommand("embed", "Embed every text a run needs that the store lacks");
    add_common(embed, f);
    embed->add_flag("--dry-run", f.dry_run, "Only count missing embeddings");
    embed->add_option("--store-out", f.store_out, "Output store (default: first --vectors path)");

    auto* train = app.add_subcommand("train", "Train the sentence selector and the cross-fitted router");
    add_common(train, f);

    auto* eval = app.add_subcommand("eval", "Route and evaluate every query");
    add_common(eval, f);
    eval->add_flag("--use-oof", f.use_oof, "Route with out-of-fold probabilities");
    eval->add_option("--trace", f.trace, "Routing trace JSONL (default <output-dir>/trace_<dataset>_<hash>.jsonl)");

    auto* experiment = app.add_subcommand("experiment", "Run one named experiment");
    add_common(experiment, f);
    experiment->add_option("name", f.experiment, "Experiment name")->required();
    experiment->add_flag("--use-oof", f.use_oof, "Route with out-of-fold probabilities");
    experiment->add_option("--n", f.n, "synthetic-calibration: number of queries (default 10000)");
    experiment->add_option("--pool-size", f.pool_size, "synthetic-calibration: pool size (default 200)");
    experiment->add_option("--sigma", f.sigma, "synthetic-calibration: pool stddev (default 0.1)");
    experiment->add_option("--margin-spread", f.margin_spread,
                           "synthetic-calibration: margins drawn from U(-s, s) (default 0.5)");
    experiment->add_option("--seed", f.seed, "synthetic-calibration: RNG seed (default 7)");
    experiment->add_flag("--shuffle", f.shuffle, "synthetic-calibration: shuffle the margin/AUC pairing");
    experiment->add_option("--taus", f.taus, "threshold-sweep: thresholds (default 0.5 to 0.75 by 0.05)");
    experiment->add_option("--sigma-mode", f.sigma_mode, "calibration: per_query or global (default per_query)");
    experiment->add_option("--cantelli-t", f.cantelli_t, "calibration: Cantelli threshold t (default 0.9)");
    experiment->add_option("--kappa-file", f.kappa_file, "regime-assignment: JSONL of {id, rater_a, rater_b}");

    auto* report = app.add_subcommand("report", "Summarize report JSON files");
    report->add_option("inputs", f.inputs, "Report JSON files")->required();
    report->add_option("--out", f.report_out, "Also write the summary to this file");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kParseError;
    }

    try {
        if (*report) return cmd_report(f, out);
        const auto cfg = build_config(f);
        if (*ingest) return cmd_ingest(cfg, f, out, err);
        if (*embed) return cmd_embed(cfg, f, out, err, env);
        if (*train) return cmd_train(cfg, f, out, err);
        if (*eval) return cmd_eval(cfg, f, out, err);
        if (*experiment) return cmd_experiment(cfg, f, out, err);
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return kParseError;
    } catch (const IntegrityError& e) {
        err << "integrity error: " << e.what() << '\n';
        return kIntegrityError;
    } catch (const MissingEmbeddingError& e) {
        err << "missing embeddings: " << e.what() << '\n';
        return kMissingEmbedding;
    } catch (const TrainingError& e) {
        err << "training error: " << e.what() << '\n';
        return kTrainingError;
    } catch (const ProviderError& e) {
        err << "provider error: " << e.what() << '\n';
        return kProviderError;
    } catch (const TransportError& e) {
        err << "transport error: " << e.what() << '\n';
        return kProviderError;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}

}  // namespace regime::cli
