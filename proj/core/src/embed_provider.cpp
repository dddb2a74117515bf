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

#include "regime/embed_provider.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <future>
#include <iostream>
#include <thread>

#include "regime/errors.hpp"
#include "regime/text_key.hpp"

namespace regime {

namespace {

struct ParsedUrl {
    std::string base;  // scheme://host[:port]
    std::string path;
};

ParsedUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint must include a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string bearer_token(const EmbedProviderConfig& cfg) {
    if (cfg.token_env.empty()) return {};
    const char* value = std::getenv(cfg.token_env.c_str());
    if (value == nullptr || *value == '\0') {
        throw ConfigError("environment variable " + cfg.token_env + " holding the provider token is not set");
    }
    return value;
}

}  // namespace

EmbedProviderConfig provider_config_from_json(const nlohmann::json& j) {
    EmbedProviderConfig cfg;
    try {
        cfg.endpoint = j.at("endpoint").get<std::string>();
        cfg.model_name = j.at("model").get<std::string>();
        if (auto it = j.find("mode_instructions"); it != j.end()) {
            for (const auto& [mode, prefix] : it->items()) {
                cfg.mode_instructions[parse_encoder_mode(mode)] = prefix.get<std::string>();
            }
        }
        cfg.token_env = j.value("token_env", std::string{});
        cfg.timeout = std::chrono::milliseconds(j.value("timeout_ms", 30000));
        cfg.max_retries = j.value("max_retries", 3);
        cfg.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", 200));
        cfg.batch_size = j.value("batch_size", std::size_t{32});
        cfg.parallelism = j.value("parallelism", std::size_t{4});
        cfg.expected_dim = j.value("expected_dim", std::uint32_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid provider config: ") + e.what());
    }
    if (cfg.batch_size == 0 || cfg.parallelism == 0) throw ConfigError("batch_size and parallelism must be positive");
    if (cfg.max_retries < 0) throw ConfigError("max_retries must be non-negative");
    return cfg;
}

nlohmann::json to_json(const EmbedProviderConfig& cfg) {
    nlohmann::json instructions = nlohmann::json::object();
    for (const auto& [mode, prefix] : cfg.mode_instructions) instructions[std::string(to_string(mode))] = prefix;
    return {{"endpoint", cfg.endpoint},
            {"model", cfg.model_name},
            {"mode_instructions", instructions},
            {"token_env", cfg.token_env},
            {"timeout_ms", cfg.timeout.count()},
            {"max_retries", cfg.max_retries},
            {"initial_backoff_ms", cfg.initial_backoff.count()},
            {"batch_size", cfg.batch_size},
            {"parallelism", cfg.parallelism},
            {"expected_dim", cfg.expected_dim}};
}

HttpResponse HttpTransport::post(const std::string& url, const std::string& json_body,
                                 const std::string& bearer_token, std::chrono::milliseconds timeout) {
    auto [base, path] = split_url(url);
    httplib::Client client(base);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
    auto res = client.Post(path, headers, json_body, "application/json");
    if (!res) throw TransportError("POST " + url + " failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
}

EmbedClient::EmbedClient(EmbedProviderConfig cfg, std::shared_ptr<EmbedTransport> transport,
                         std::optional<std::filesystem::path> cache_path)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), cache_path_(std::move(cache_path)) {
    if (!transport_) throw ConfigError("embed client needs a transport");
    if (cfg_.batch_size == 0 || cfg_.parallelism == 0) throw ConfigError("batch_size and parallelism must be positive");
    if (cache_path_ && std::filesystem::exists(*cache_path_)) {
        try {
            VectorStore cached = load_vectors(*cache_path_);
            dim_ = cached.dim();
            cache_ = cached.entries();
        } catch (const Error& e) {
            warn(std::string("ignoring unreadable embedding cache: ") + e.what());
        }
    }
}

std::string EmbedClient::cache_id(const std::string& text) const { return cfg_.model_name + "/" + sha256_hex(text); }

FetchStats EmbedClient::stats() const {
    std::lock_guard lock(mu_);
    return stats_;
}

void EmbedClient::warn(std::string message) {
    std::cerr << "warning: " << message << '\n';
    stats_.warnings.push_back(std::move(message));
}

std::vector<Vector> EmbedClient::fetch_batch(const std::vector<std::string>& texts, EncoderMode mode) {
    nlohmann::json input = nlohmann::json::array();
    std::string prefix;
    if (auto it = cfg_.mode_instructions.find(mode); it != cfg_.mode_instructions.end()) prefix = it->second;
    for (const auto& t : texts) input.push_back(prefix + t);
    const std::string body =
        nlohmann::json{{"model", cfg_.model_name}, {"input", input}, {"mode", std::string(to_string(mode))}}.dump();
    const std::string token = bearer_token(cfg_);

    HttpResponse res;
    auto backoff = cfg_.initial_backoff;
    for (int attempt = 0;; ++attempt) {
        {
            std::lock_guard lock(mu_);
            ++stats_.requests;
        }
        try {
            res = transport_->post(cfg_.endpoint, body, token, cfg_.timeout);
            break;
        } catch (const TransportError&) {
            if (attempt >= cfg_.max_retries) throw;
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    if (res.status != 200) throw ProviderError(res.status, res.body);

    nlohmann::json payload;
    try {
        payload = nlohmann::json::parse(res.body);
    } catch (const nlohmann::json::parse_error&) {
        throw ProviderError(res.status, res.body);
    }
    if (!payload.is_object() || payload.contains("error") || !payload.contains("vectors") ||
        !payload["vectors"].is_array()) {
        throw ProviderError(res.status, res.body);
    }
    const auto& rows = payload["vectors"];
    if (rows.size() != texts.size()) {
        throw ProviderError(res.status, "expected " + std::to_string(texts.size()) + " vectors, got " +
                                            std::to_string(rows.size()) + ": " + res.body);
    }
    std::vector<Vector> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        Vector v;
        try {
            v = row.get<Vector>();
        } catch (const nlohmann::json::exception&) {
            throw ProviderError(res.status, res.body);
        }
        if (cfg_.expected_dim != 0 && v.size() != cfg_.expected_dim) {
            throw DimensionMismatchError("provider returned dimension " + std::to_string(v.size()) + ", expected " +
                                         std::to_string(cfg_.expected_dim));
        }
        normalize(v);
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<Vector> EmbedClient::fetch(const std::vector<std::string>& texts, EncoderMode mode) {
    std::vector<Vector> result(texts.size());
    std::vector<std::size_t> missing;
    {
        std::lock_guard lock(mu_);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            auto it = cache_.find({cache_id(texts[i]), mode});
            if (it != cache_.end()) {
                result[i] = it->second;
                ++stats_.cache_hits;
            } else {
                missing.push_back(i);
            }
        }
    }
    if (missing.empty()) return result;

    // Deduplicate so a text repeated in one call is requested once.
    std::vector<std::string> unique_texts;
    std::map<std::string, std::size_t> slot;
    for (std::size_t i : missing) {
        if (slot.emplace(texts[i], unique_texts.size()).second) unique_texts.push_back(texts[i]);
    }

    std::vector<std::vector<std::string>> batches;
    for (std::size_t start = 0; start < unique_texts.size(); start += cfg_.batch_size) {
        auto end = std::min(unique_texts.size(), start + cfg_.batch_size);
        batches.emplace_back(unique_texts.begin() + static_cast<std::ptrdiff_t>(start),
                             unique_texts.begin() + static_cast<std::ptrdiff_t>(end));
    }
    std::vector<std::vector<Vector>> batch_results(batches.size());
    for (std::size_t wave = 0; wave < batches.size(); wave += cfg_.parallelism) {
        std::vector<std::future<std::vector<Vector>>> inflight;
        auto wave_end = std::min(batches.size(), wave + cfg_.parallelism);
        for (std::size_t b = wave; b < wave_end; ++b) {
            inflight.push_back(std::async(std::launch::async, [this, &batches, b, mode] {
                return fetch_batch(batches[b], mode);
            }));
        }
        for (std::size_t b = wave; b < wave_end; ++b) batch_results[b] = inflight[b - wave].get();
    }

    std::vector<Vector> fresh;
    for (auto& br : batch_results) {
        for (auto& v : br) fresh.push_back(std::move(v));
    }
    {
        std::lock_guard lock(mu_);
        for (const auto& v : fresh) {
            if (dim_ == 0) dim_ = static_cast<std::uint32_t>(v.size());
            if (v.size() != dim_) {
                throw DimensionMismatchError("provider returned dimension " + std::to_string(v.size()) +
                                             ", cache dimension is " + std::to_string(dim_));
            }
        }
        for (std::size_t u = 0; u < unique_texts.size(); ++u) cache_[{cache_id(unique_texts[u]), mode}] = fresh[u];
        stats_.fetched += unique_texts.size();
        for (std::size_t i : missing) result[i] = fresh[slot.at(texts[i])];
        flush_cache();
    }
    return result;
}

void EmbedClient::flush_cache() {
    if (!cache_path_) return;
    try {
        std::vector<std::pair<VectorStore::Key, Vector>> records(cache_.begin(), cache_.end());
        write_vector_file(*cache_path_, dim_, records);
    } catch (const std::exception& e) {
        warn(std::string("could not write embedding cache: ") + e.what());
    }
}

std::vector<Vector> fetch_remote(const EmbedProviderConfig& cfg, const std::vector<std::string>& texts,
                                 EncoderMode mode, const std::optional<std::filesystem::path>& cache_path) {
    EmbedClient client(cfg, std::make_shared<HttpTransport>(), cache_path);
    return client.fetch(texts, mode);
}

}  // namespace regime
