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

#include "regime/cli/run_config.hpp"

#include <fstream>
#include <set>

#include "regime/errors.hpp"

namespace regime::cli {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    if (path.empty() || path.is_absolute() || base.empty()) return path;
    return base / path;
}

std::string path_string(const std::filesystem::path& p) { return p.generic_string(); }

}  // namespace

std::filesystem::path RunConfig::selector_path() const {
    return selector_model.empty() ? output_dir / "selector.json" : selector_model;
}

std::filesystem::path RunConfig::router_path() const {
    return router_model.empty() ? output_dir / "router.json" : router_model;
}

std::filesystem::path RunConfig::oof_path() const { return oof.empty() ? output_dir / "oof.jsonl" : oof; }

void apply_config_json(RunConfig& cfg, const nlohmann::json& j, const std::filesystem::path& base_dir) {
    static const std::set<std::string> known{
        "dataset",     "vectors",   "models",      "annotations", "lexicons",   "embed_cache",
        "alpha",       "tau",       "alpha_mode",  "k",           "label_mode", "abstain_threshold",
        "l2_penalty",  "tol",       "max_iter",    "folds",       "parallelism", "output_dir",
        "provider"};
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ConfigError("unknown config key \"" + key + "\"");
    }
    try {
        if (auto it = j.find("dataset"); it != j.end()) {
            for (const auto& [key, value] : it->items()) {
                if (key == "name") cfg.dataset_name = value.get<std::string>();
                else if (key == "queries") cfg.queries = resolve(base_dir, value.get<std::string>());
                else if (key == "passages") cfg.passages = resolve(base_dir, value.get<std::string>());
                else throw ConfigError("unknown config key \"dataset." + key + "\"");
            }
        }
        if (auto it = j.find("vectors"); it != j.end()) {
            cfg.vectors.clear();
            for (const auto& v : *it) cfg.vectors.push_back(resolve(base_dir, v.get<std::string>()));
        }
        if (auto it = j.find("models"); it != j.end()) {
            for (const auto& [key, value] : it->items()) {
                if (key == "selector") cfg.selector_model = resolve(base_dir, value.get<std::string>());
                else if (key == "router") cfg.router_model = resolve(base_dir, value.get<std::string>());
                else if (key == "oof") cfg.oof = resolve(base_dir, value.get<std::string>());
                else throw ConfigError("unknown config key \"models." + key + "\"");
            }
        }
        if (auto it = j.find("annotations"); it != j.end()) cfg.annotations = resolve(base_dir, it->get<std::string>());
        if (auto it = j.find("lexicons"); it != j.end()) cfg.lexicon_dir = resolve(base_dir, it->get<std::string>());
        if (auto it = j.find("embed_cache"); it != j.end()) cfg.embed_cache = resolve(base_dir, it->get<std::string>());
        if (auto it = j.find("alpha"); it != j.end()) cfg.router.alpha = it->get<double>();
        if (auto it = j.find("tau"); it != j.end()) cfg.router.tau = it->get<double>();
        if (auto it = j.find("alpha_mode"); it != j.end()) cfg.router.alpha_mode = parse_alpha_mode(it->get<std::string>());
        if (auto it = j.find("k"); it != j.end()) cfg.router.k = it->get<std::size_t>();
        if (auto it = j.find("label_mode"); it != j.end()) cfg.router.label_mode = parse_label_mode(it->get<std::string>());
        if (auto it = j.find("abstain_threshold"); it != j.end()) cfg.router.abstain_threshold = it->get<double>();
        if (auto it = j.find("l2_penalty"); it != j.end()) cfg.train.l2_penalty = it->get<double>();
        if (auto it = j.find("tol"); it != j.end()) cfg.train.tol = it->get<double>();
        if (auto it = j.find("max_iter"); it != j.end()) cfg.train.max_iter = it->get<int>();
        if (auto it = j.find("folds"); it != j.end()) cfg.folds = it->get<std::size_t>();
        if (auto it = j.find("parallelism"); it != j.end()) cfg.parallelism = it->get<std::size_t>();
        if (auto it = j.find("output_dir"); it != j.end()) cfg.output_dir = resolve(base_dir, it->get<std::string>());
        if (auto it = j.find("provider"); it != j.end()) cfg.provider = provider_config_from_json(*it);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    apply_config_json(cfg, j, path.parent_path());
}

void validate(const RunConfig& cfg) {
    validate(cfg.router);
    if (cfg.folds < 2) throw ConfigError("folds must be at least 2");
    if (cfg.parallelism < 1) throw ConfigError("parallelism must be at least 1");
    if (!(cfg.train.l2_penalty >= 0)) throw ConfigError("l2_penalty must be non-negative");
    if (!(cfg.train.tol > 0)) throw ConfigError("tol must be positive");
    if (cfg.train.max_iter < 1) throw ConfigError("max_iter must be at least 1");
}

nlohmann::json effective_config(const RunConfig& cfg) {
    nlohmann::json vectors = nlohmann::json::array();
    for (const auto& v : cfg.vectors) vectors.push_back(path_string(v));
    nlohmann::json j{
        {"dataset", {{"name", cfg.dataset_name}, {"queries", path_string(cfg.queries)}, {"passages", path_string(cfg.passages)}}},
        {"vectors", vectors},
        {"models",
         {{"selector", path_string(cfg.selector_model)},
          {"router", path_string(cfg.router_model)},
          {"oof", path_string(cfg.oof)}}},
        {"annotations", path_string(cfg.annotations)},
        {"lexicons", path_string(cfg.lexicon_dir)},
        {"router", to_json(cfg.router)},
        {"train", {{"l2_penalty", cfg.train.l2_penalty}, {"tol", cfg.train.tol}, {"max_iter", cfg.train.max_iter}}},
        {"folds", cfg.folds}};
    if (cfg.provider) {
        auto p = to_json(*cfg.provider);
        p.erase("parallelism");
        j["provider"] = p;
    }
    return j;
}

}  // namespace regime::cli
