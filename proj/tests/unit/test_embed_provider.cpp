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

#include <atomic>
#include <cmath>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "regime/embed_provider.hpp"
#include "regime/errors.hpp"
#include "synthetic_corpus.hpp"

namespace regime {
namespace {

// Deterministic vector for a text: character-class counts plus length.
Vector echo_vector(const std::string& text, std::size_t dim) {
    Vector v(dim, 0.0);
    for (std::size_t i = 0; i < text.size(); ++i) v[i % dim] += static_cast<unsigned char>(text[i]);
    v[0] += 1.0;
    return v;
}

class EchoTransport : public EmbedTransport {
 public:
    explicit EchoTransport(std::size_t dim) : dim_(dim) {}

    HttpResponse post(const std::string&, const std::string& body, const std::string& token,
                      std::chrono::milliseconds) override {
        ++calls;
        last_token = token;
        if (failures_left > 0) {
            --failures_left;
            throw TransportError("connection refused");
        }
        const auto j = nlohmann::json::parse(body);
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& t : j.at("input")) {
            texts_seen.push_back(t.get<std::string>());
            rows.push_back(echo_vector(t.get<std::string>(), dim_));
        }
        return {200, nlohmann::json{{"vectors", rows}}.dump()};
    }

    std::atomic<int> calls{0};
    std::atomic<int> failures_left{0};
    std::string last_token;
    std::vector<std::string> texts_seen;

 private:
    std::size_t dim_;
};

class FixedTransport : public EmbedTransport {
 public:
    explicit FixedTransport(HttpResponse r) : r_(std::move(r)) {}
    HttpResponse post(const std::string&, const std::string&, const std::string&, std::chrono::milliseconds) override {
        return r_;
    }

 private:
    HttpResponse r_;
};

EmbedProviderConfig test_config() {
    EmbedProviderConfig cfg;
    cfg.endpoint = "http://localhost:1/v1/embed";
    cfg.model_name = "echo";
    cfg.initial_backoff = std::chrono::milliseconds(1);
    cfg.batch_size = 2;
    cfg.parallelism = 2;
    return cfg;
}

TEST(EmbedClient, BatchIsOrderAligned) {
    auto t = std::make_shared<EchoTransport>(4);
    EmbedClient client(test_config(), t);
    const std::vector<std::string> texts{"alpha", "beta", "gamma"};
    const auto vs = client.fetch(texts, EncoderMode::query);
    ASSERT_EQ(vs.size(), 3u);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        auto expected = echo_vector(texts[i], 4);
        normalize(expected);
        for (std::size_t d = 0; d < 4; ++d) EXPECT_NEAR(vs[i][d], expected[d], 1e-12);
    }
}

TEST(EmbedClient, CacheHitMakesNoCall) {
    const auto dir = testing::make_temp_dir("cache");
    auto t = std::make_shared<EchoTransport>(4);
    const std::vector<std::string> texts{"one", "two"};
    std::vector<Vector> first;
    {
        EmbedClient client(test_config(), t, dir / "cache.rgv");
        first = client.fetch(texts, EncoderMode::doc);
    }
    const int calls_after_first = t->calls;
    EXPECT_GT(calls_after_first, 0);
    EmbedClient again(test_config(), t, dir / "cache.rgv");
    const auto second = again.fetch(texts, EncoderMode::doc);
    EXPECT_EQ(t->calls, calls_after_first);
    EXPECT_EQ(again.stats().cache_hits, 2u);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        for (std::size_t d = 0; d < 4; ++d) EXPECT_NEAR(first[i][d], second[i][d], 1e-6);
    }
}

TEST(EmbedClient, CacheKeyedByMode) {
    auto t = std::make_shared<EchoTransport>(4);
    EmbedClient client(test_config(), t);
    client.fetch({"x"}, EncoderMode::query);
    client.fetch({"x"}, EncoderMode::doc);
    EXPECT_EQ(client.stats().fetched, 2u);
    client.fetch({"x"}, EncoderMode::doc);
    EXPECT_EQ(client.stats().fetched, 2u);
}

TEST(EmbedClient, ModeInstructionIsPrefixed) {
    auto cfg = test_config();
    cfg.mode_instructions[EncoderMode::query] = "query: ";
    auto t = std::make_shared<EchoTransport>(4);
    EmbedClient client(cfg, t);
    client.fetch({"hello"}, EncoderMode::query);
    ASSERT_EQ(t->texts_seen.size(), 1u);
    EXPECT_EQ(t->texts_seen[0], "query: hello");
}

TEST(EmbedClient, RetriesTransportErrors) {
    auto t = std::make_shared<EchoTransport>(4);
    t->failures_left = 2;
    auto cfg = test_config();
    cfg.max_retries = 3;
    EmbedClient client(cfg, t);
    EXPECT_NO_THROW(client.fetch({"a"}, EncoderMode::query));
    EXPECT_EQ(t->calls, 3);

    auto t2 = std::make_shared<EchoTransport>(4);
    t2->failures_left = 10;
    cfg.max_retries = 2;
    EmbedClient failing(cfg, t2);
    EXPECT_THROW(failing.fetch({"a"}, EncoderMode::query), TransportError);
    EXPECT_EQ(t2->calls, 3);
}

TEST(EmbedClient, ProviderErrorIsVerbatim) {
    const std::string body = R"({"error":"model overloaded"})";
    EmbedClient client(test_config(), std::make_shared<FixedTransport>(HttpResponse{503, body}));
    try {
        client.fetch({"a"}, EncoderMode::query);
        FAIL() << "expected ProviderError";
    } catch (const ProviderError& e) {
        EXPECT_EQ(e.status(), 503);
        EXPECT_EQ(e.body(), body);
    }
}

TEST(EmbedClient, WrongDimensionIsRejected) {
    auto cfg = test_config();
    cfg.expected_dim = 8;
    EmbedClient client(cfg, std::make_shared<EchoTransport>(4));
    EXPECT_THROW(client.fetch({"a"}, EncoderMode::query), DimensionMismatchError);
}

TEST(EmbedClient, CacheWriteFailureIsWarning) {
    const auto dir = testing::make_temp_dir("cache");
    auto t = std::make_shared<EchoTransport>(4);
    EmbedClient client(test_config(), t, dir / "no" / "such" / "dir" / "cache.rgv");
    EXPECT_NO_THROW(client.fetch({"a"}, EncoderMode::query));
    EXPECT_FALSE(client.stats().warnings.empty());
}

TEST(EmbedClient, BearerTokenFromEnvironment) {
    ::setenv("REGIME_TEST_TOKEN", "s3cret", 1);
    auto cfg = test_config();
    cfg.token_env = "REGIME_TEST_TOKEN";
    auto t = std::make_shared<EchoTransport>(4);
    EmbedClient client(cfg, t);
    client.fetch({"a"}, EncoderMode::query);
    EXPECT_EQ(t->last_token, "s3cret");
}

TEST(HttpTransport, TalksToLocalServer) {
    httplib::Server server;
    std::string seen_auth;
    server.Post("/v1/embed", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        const auto j = nlohmann::json::parse(req.body);
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& t : j.at("input")) rows.push_back(echo_vector(t.get<std::string>(), 3));
        res.set_content(nlohmann::json{{"vectors", rows}}.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ::setenv("REGIME_TEST_TOKEN", "tok", 1);
    auto cfg = test_config();
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/embed";
    cfg.token_env = "REGIME_TEST_TOKEN";
    const auto vs = fetch_remote(cfg, {"abc", "de", "f"}, EncoderMode::doc, std::nullopt);
    server.stop();
    th.join();

    ASSERT_EQ(vs.size(), 3u);
    auto expected = echo_vector("de", 3);
    normalize(expected);
    for (std::size_t d = 0; d < 3; ++d) EXPECT_NEAR(vs[1][d], expected[d], 1e-12);
    EXPECT_EQ(seen_auth, "Bearer tok");
}

TEST(HttpTransport, UnreachableEndpointIsTransportError) {
    auto cfg = test_config();
    cfg.endpoint = "http://127.0.0.1:1/v1/embed";
    cfg.max_retries = 0;
    cfg.timeout = std::chrono::milliseconds(200);
    EXPECT_THROW(fetch_remote(cfg, {"a"}, EncoderMode::query, std::nullopt), TransportError);
}

TEST(ProviderConfig, JsonRoundTrip) {
    const auto j = nlohmann::json::parse(R"({"endpoint":"http://h/e","model":"m",
        "mode_instructions":{"query":"q: "},"token_env":"T","timeout_ms":500,"max_retries":1,
        "initial_backoff_ms":5,"batch_size":4,"parallelism":2,"expected_dim":8})");
    const auto cfg = provider_config_from_json(j);
    EXPECT_EQ(cfg.model_name, "m");
    EXPECT_EQ(cfg.mode_instructions.at(EncoderMode::query), "q: ");
    EXPECT_EQ(cfg.timeout.count(), 500);
    EXPECT_EQ(provider_config_from_json(to_json(cfg)).batch_size, 4u);
}

}  // namespace
}  // namespace regime
