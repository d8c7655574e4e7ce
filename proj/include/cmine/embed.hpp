#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cmine/vecstore.hpp"

namespace cmine::embed {

using vecstore::Vector;

struct EmbedResponse {
    std::string model;
    std::size_t dim = 0;
    std::vector<Vector> vectors;
};

struct Health {
    std::string status;
    std::string model;
    std::size_t dim = 0;
};

// A frozen encoder reachable through the embed wire protocol. `embed` may be called
// from several threads at once. Implementations throw TransportError for retryable failures and ProtocolError for malformed replies.
class EmbedProvider {
public:
    virtual ~EmbedProvider() = default;
    virtual std::string id() const = 0;
    virtual Health health() = 0;
    virtual EmbedResponse embed(std::span<const std::string> texts) = 0;
};

// Speaks POST /embed and GET /health over HTTP.
class HttpEmbedProvider final : public EmbedProvider {
public:
    explicit HttpEmbedProvider(std::string base_url,
                               std::chrono::milliseconds timeout = std::chrono::seconds(60));
    std::string id() const override { return base_url_; }
    Health health() override;
    EmbedResponse embed(std::span<const std::string> texts) override;

private:
    std::string base_url_;
    std::chrono::milliseconds timeout_;
};

// Deterministic pseudo-embeddings derived from a hash of the text. Offline stand-in.
class HashEmbedProvider final : public EmbedProvider {
public:
    explicit HashEmbedProvider(std::size_t dim, std::string model = "hash-v1");
    std::string id() const override { return "mock:hash"; }
    Health health() override { return {"ok", model_, dim_}; }
    EmbedResponse embed(std::span<const std::string> texts) override;

private:
    std::size_t dim_;
    std::string model_;
};

// Answers from a fixed text -> vector table, e.g. a generated fixture.
// Unknown text is a ProtocolError.
class LookupEmbedProvider final : public EmbedProvider {
public:
    LookupEmbedProvider(std::size_t dim, std::string model = "lookup-v1");
    void add(std::string text, Vector v);
    std::string id() const override { return "mock:lookup"; }
    Health health() override { return {"ok", model_, dim_}; }
    EmbedResponse embed(std::span<const std::string> texts) override;
    std::size_t calls() const;

private:
    std::size_t dim_;
    std::string model_;
    std::unordered_map<std::string, Vector> table_;
    mutable std::mutex mutex_;
    std::size_t calls_ = 0;
};

// Builds a provider from a config string: "http://...", "mock:hash:<dim>".
std::unique_ptr<EmbedProvider> make_provider(const std::string& spec);

// Content-addressed store keyed by SHA-256 over (provider id, model id, text).
// Safe for concurrent use; inserting an existing key overwrites with the same value.
class EmbedCache {
public:
    static std::string key(const std::string& provider, const std::string& model,
                           const std::string& text);

    std::optional<Vector> get(const std::string& key) const;
    void put(const std::string& key, Vector v);
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::unordered_map<std::string, Vector> entries_;
};

struct EmbedderOptions {
    std::size_t expected_dim = 0;
    std::size_t batch_size = 64;
    std::size_t max_in_flight = 4;
    int max_attempts = 3;
    std::chrono::milliseconds backoff_base{200};
};

struct EmbedStats {
    std::size_t cache_hits = 0;
    std::size_t requested = 0;
    std::size_t retries = 0;
};

// Batches, caches and retries calls to a provider.
class Embedder {
public:
    Embedder(EmbedProvider& provider, EmbedderOptions options,
             std::shared_ptr<EmbedCache> cache = std::make_shared<EmbedCache>());

    // One vector per text, in order. Throws ConfigError when the provider's dimension
    // differs from `expected_dim`, TransportError after the last failed attempt.
    std::vector<Vector> embed_batch(std::span<const std::string> texts);

    const EmbedStats& stats() const noexcept { return stats_; }
    const std::string& model() const noexcept { return model_; }

private:
    EmbedResponse call_with_retry(std::span<const std::string> texts);

    EmbedProvider& provider_;
    EmbedderOptions options_;
    std::shared_ptr<EmbedCache> cache_;
    std::string model_;
    EmbedStats stats_;
    std::mutex stats_mutex_;
};

}  // namespace cmine::embed
