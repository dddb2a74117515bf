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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "regime/embedding_store.hpp"

namespace regime {

struct EmbedProviderConfig {
    std::string endpoint;  // full URL, e.g. http://localhost:8080/v1/embed
    std::string model_name;
    /// Prefix prepended to each text before sending, per mode.
    std::map<EncoderMode, std::string> mode_instructions;
    /// Name of the environment variable holding the bearer token; empty disables auth.
    std::string token_env;
    std::chrono::milliseconds timeout{30000};
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{200};
    std::size_t batch_size = 32;
    std::size_t parallelism = 4;
    /// When non-zero, every returned vector must have this dimension.
    std::uint32_t expected_dim = 0;
};

EmbedProviderConfig provider_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EmbedProviderConfig& cfg);

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// One POST of a JSON body. Implementations throw TransportError when no
/// response was received.
class EmbedTransport {
 public:
    virtual ~EmbedTransport() = default;
    virtual HttpResponse post(const std::string& url, const std::string& json_body, const std::string& bearer_token,
                              std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib backed transport. Supports http:// URLs.
class HttpTransport final : public EmbedTransport {
 public:
    HttpResponse post(const std::string& url, const std::string& json_body, const std::string& bearer_token,
                      std::chrono::milliseconds timeout) override;
};

struct FetchStats {
    std::size_t requests = 0;     // POSTs attempted, retries included
    std::size_t cache_hits = 0;
    std::size_t fetched = 0;      // texts embedded remotely
    std::vector<std::string> warnings;
};

/// Fetches query- or doc-mode vectors from a remote provider, caching results in
/// a local vector file keyed by (model name, sha256(text), mode).
class EmbedClient {
 public:
    EmbedClient(EmbedProviderConfig cfg, std::shared_ptr<EmbedTransport> transport,
                std::optional<std::filesystem::path> cache_path = std::nullopt);

    /// One normalized vector per text, order-aligned with the input.
    std::vector<Vector> fetch(const std::vector<std::string>& texts, EncoderMode mode);

    FetchStats stats() const;
    const EmbedProviderConfig& config() const noexcept { return cfg_; }

    /// Cache id for a text under this client's model.
    std::string cache_id(const std::string& text) const;

 private:
    std::vector<Vector> fetch_batch(const std::vector<std::string>& texts, EncoderMode mode);
    void warn(std::string message);
    void flush_cache();

    EmbedProviderConfig cfg_;
    std::shared_ptr<EmbedTransport> transport_;
    std::optional<std::filesystem::path> cache_path_;

    mutable std::mutex mu_;
    std::uint32_t dim_ = 0;
    std::map<VectorStore::Key, Vector> cache_;
    FetchStats stats_;
};

/// Convenience wrapper over EmbedClient with an HttpTransport.
std::vector<Vector> fetch_remote(const EmbedProviderConfig& cfg, const std::vector<std::string>& texts,
                                 EncoderMode mode, const std::optional<std::filesystem::path>& cache_path);

}  // namespace regime
