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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace regime {

struct Passage {
    std::string id;
    std::string title;
    std::string body;

    bool operator==(const Passage&) const = default;
};

enum class QueryType { comparison, bridge_comparison, compositional, inference, other };

std::string_view to_string(QueryType type);
/// Throws ValidationError on unknown names.
QueryType parse_query_type(std::string_view name);

struct Query {
    std::string id;
    std::string question;
    QueryType qtype = QueryType::other;
    std::string bridge_id;          // hop-1 gold passage
    std::string gold_id;            // hop-2 gold passage
    std::vector<std::string> pool_ids;
    std::string hop2_title;

    bool operator==(const Query&) const = default;
};

/// A loaded two-hop dataset. Every bridge/gold/pool id resolves to a passage.
struct Dataset {
    std::string name;
    std::vector<Query> queries;
    std::map<std::string, Passage> passages;

    const Passage& passage(const std::string& id) const;
    const Query* find_query(const std::string& id) const;

    bool operator==(const Dataset&) const = default;
};

struct DatasetPaths {
    std::filesystem::path queries;
    std::filesystem::path passages;
};

enum class DatasetFormat { jsonl };

/// Loads and validates a dataset. Throws ParseError (with line number) or
/// IntegrityError (listing every dangling passage id).
Dataset load_dataset(const DatasetPaths& paths, DatasetFormat format = DatasetFormat::jsonl);

/// Checks the Dataset invariants; throws IntegrityError / ValidationError.
void validate(const Dataset& ds);

void save_dataset(const Dataset& ds, const DatasetPaths& paths);

Query query_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Query& q);
Passage passage_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Passage& p);

/// Reads hop1_ranks.jsonl lines of the form {"id", "rank"}.
std::map<std::string, int> load_hop1_ranks(const std::filesystem::path& path);

/// Keeps queries whose bridge passage ranked within the top five at hop 1.
/// Throws IntegrityError naming queries without a rank.
Dataset filter_hop1_correct(const Dataset& ds, const std::map<std::string, int>& hop1_ranks,
                            int max_rank = 5);

}  // namespace regime
