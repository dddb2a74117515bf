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
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "regime/embed_provider.hpp"
#include "regime/linear_model.hpp"
#include "regime/router.hpp"

namespace regime::cli {

/// Effective settings of one command. Built from defaults, then the config
/// file, then command-line flags.
struct RunConfig {
    std::string dataset_name;
    std::filesystem::path queries;
    std::filesystem::path passages;
    std::vector<std::filesystem::path> vectors;
    std::filesystem::path selector_model;  // empty: <output_dir>/selector.json
    std::filesystem::path router_model;    // empty: <output_dir>/router.json
    std::filesystem::path oof;             // empty: <output_dir>/oof.jsonl
    std::filesystem::path annotations;
    std::filesystem::path lexicon_dir;
    std::filesystem::path embed_cache;
    RouterConfig router;
    TrainConfig train;
    std::size_t folds = 5;
    std::size_t parallelism = 1;
    std::filesystem::path output_dir = "out";
    std::optional<EmbedProviderConfig> provider;

    std::filesystem::path selector_path() const;
    std::filesystem::path router_path() const;
    std::filesystem::path oof_path() const;
};

/// Applies a JSON config file. Relative paths resolve against the file's
/// directory. Unknown keys raise ConfigError.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

void apply_config_json(RunConfig& cfg, const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Throws ConfigError on out-of-range values.
void validate(const RunConfig& cfg);

/// Config as embedded in reports. Leaves out output_dir and parallelism, which
/// do not affect results.
nlohmann::json effective_config(const RunConfig& cfg);

}  // namespace regime::cli
