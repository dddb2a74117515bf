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

#include "regime/corpus.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <utility>

#include "regime/errors.hpp"

namespace regime {

namespace {

constexpr std::array<std::pair<QueryType, std::string_view>, 5> kTypeNames{{
    {QueryType::comparison, "comparison"},
    {QueryType::bridge_comparison, "bridge_comparison"},
    {QueryType::compositional, "compositional"},
    {QueryType::inference, "inference"},
    {QueryType::other, "other"},
}};

std::string required_string(const nlohmann::json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end()) throw ValidationError(std::string("missing field \"") + field + "\"");
    if (!it->is_string()) throw ValidationError(std::string("field \"") + field + "\" must be a string");
    return it->get<std::string>();
}

template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
        if (!j.is_object()) throw ParseError(path.string(), lineno, "expected a JSON object");
        try {
            fn(j);
        } catch (const ValidationError& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
    }
}

}  // namespace

std::string_view to_string(QueryType type) {
    for (const auto& [t, name] : kTypeNames) {
        if (t == type) return name;
    }
    return "other";
}

QueryType parse_query_type(std::string_view name) {
    for (const auto& [t, n] : kTypeNames) {
        if (n == name) return t;
    }
    throw ValidationError("unknown qtype \"" + std::string(name) + "\"");
}

const Passage& Dataset::passage(const std::string& id) const {
    auto it = passages.find(id);
    if (it == passages.end()) throw IntegrityError("unknown passage id", {id});
    return it->second;
}

const Query* Dataset::find_query(const std::string& id) const {
    auto it = std::find_if(queries.begin(), queries.end(), [&](const Query& q) { return q.id == id; });
    return it == queries.end() ? nullptr : &*it;
}

Query query_from_json(const nlohmann::json& j) {
    Query q;
    q.id = required_string(j, "id");
    q.question = required_string(j, "question");
    q.qtype = j.contains("qtype") && !j["qtype"].is_null() ? parse_query_type(required_string(j, "qtype"))
                                                          : QueryType::other;
    q.bridge_id = required_string(j, "bridge_id");
    q.gold_id = required_string(j, "gold_id");
    q.hop2_title = required_string(j, "hop2_title");
    auto pool = j.find("pool_ids");
    if (pool == j.end() || !pool->is_array()) throw ValidationError("field \"pool_ids\" must be an array");
    for (const auto& id : *pool) {
        if (!id.is_string()) throw ValidationError("pool_ids entries must be strings");
        q.pool_ids.push_back(id.get<std::string>());
    }
    return q;
}

nlohmann::json to_json(const Query& q) {
    return nlohmann::json{{"id", q.id},
                          {"question", q.question},
                          {"qtype", std::string(to_string(q.qtype))},
                          {"bridge_id", q.bridge_id},
                          {"gold_id", q.gold_id},
                          {"pool_ids", q.pool_ids},
                          {"hop2_title", q.hop2_title}};
}

Passage passage_from_json(const nlohmann::json& j) {
    return Passage{required_string(j, "id"), required_string(j, "title"), required_string(j, "body")};
}

nlohmann::json to_json(const Passage& p) {
    return nlohmann::json{{"id", p.id}, {"title", p.title}, {"body", p.body}};
}

void validate(const Dataset& ds) {
    std::set<std::string> query_ids;
    std::set<std::string> dangling;
    auto check = [&](const std::string& id) {
        if (!ds.passages.contains(id)) dangling.insert(id);
    };
    for (const auto& [id, p] : ds.passages) {
        if (id.empty() || id != p.id) throw ValidationError("passage map key does not match passage id \"" + p.id + "\"");
        if (p.body.empty()) throw ValidationError("passage \"" + id + "\" has an empty body");
    }
    for (const auto& q : ds.queries) {
        if (q.id.empty()) throw ValidationError("query with empty id");
        if (!query_ids.insert(q.id).second) throw ValidationError("duplicate query id \"" + q.id + "\"");
        if (q.bridge_id == q.gold_id) throw ValidationError("query \"" + q.id + "\": bridge_id equals gold_id");
        std::set<std::string> seen;
        for (const auto& pid : q.pool_ids) {
            if (!seen.insert(pid).second) {
                throw ValidationError("query \"" + q.id + "\": duplicate pool id \"" + pid + "\"");
            }
            check(pid);
        }
        check(q.bridge_id);
        check(q.gold_id);
    }
    if (!dangling.empty()) {
        throw IntegrityError("dangling passage ids", {dangling.begin(), dangling.end()});
    }
}

Dataset load_dataset(const DatasetPaths& paths, DatasetFormat format) {
    if (format != DatasetFormat::jsonl) throw ValidationError("unsupported dataset format");
    Dataset ds;
    ds.name = paths.queries.stem().string();
    for_each_json_line(paths.passages, [&](const nlohmann::json& j) {
        Passage p = passage_from_json(j);
        if (p.id.empty()) throw ValidationError("passage id is empty");
        if (p.body.empty()) throw ValidationError("passage \"" + p.id + "\" has an empty body");
        std::string id = p.id;
        if (!ds.passages.emplace(id, std::move(p)).second) {
            throw ValidationError("duplicate passage id \"" + id + "\"");
        }
    });
    std::set<std::string> query_ids;
    for_each_json_line(paths.queries, [&](const nlohmann::json& j) {
        Query q = query_from_json(j);
        if (q.id.empty()) throw ValidationError("query id is empty");
        if (!query_ids.insert(q.id).second) throw ValidationError("duplicate query id \"" + q.id + "\"");
        if (q.bridge_id == q.gold_id) throw ValidationError("bridge_id equals gold_id");
        std::set<std::string> seen;
        for (const auto& pid : q.pool_ids) {
            if (!seen.insert(pid).second) throw ValidationError("duplicate pool id \"" + pid + "\"");
        }
        ds.queries.push_back(std::move(q));
    });
    validate(ds);
    return ds;
}

void save_dataset(const Dataset& ds, const DatasetPaths& paths) {
    std::ofstream qout(paths.queries);
    std::ofstream pout(paths.passages);
    if (!qout || !pout) throw Error("cannot open dataset output files for writing");
    for (const auto& q : ds.queries) qout << to_json(q).dump() << '\n';
    for (const auto& [id, p] : ds.passages) pout << to_json(p).dump() << '\n';
}

std::map<std::string, int> load_hop1_ranks(const std::filesystem::path& path) {
    std::map<std::string, int> ranks;
    for_each_json_line(path, [&](const nlohmann::json& j) {
        auto id = required_string(j, "id");
        auto rank = j.find("rank");
        if (rank == j.end() || !rank->is_number_integer()) throw ValidationError("field \"rank\" must be an integer");
        ranks[id] = rank->get<int>();
    });
    return ranks;
}

Dataset filter_hop1_correct(const Dataset& ds, const std::map<std::string, int>& hop1_ranks, int max_rank) {
    std::vector<std::string> missing;
    for (const auto& q : ds.queries) {
        if (!hop1_ranks.contains(q.id)) missing.push_back(q.id);
    }
    if (!missing.empty()) throw IntegrityError("queries without a hop-1 rank", missing);

    Dataset out;
    out.name = ds.name;
    for (const auto& q : ds.queries) {
        if (hop1_ranks.at(q.id) > max_rank) continue;
        out.queries.push_back(q);
    }
    out.passages = ds.passages;
    return out;
}

}  // namespace regime
