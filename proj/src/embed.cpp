#include "cmine/embed.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <deque>
#include <future>
#include <thread>
#include <unordered_set>

#include "cmine/error.hpp"
#include "cmine/random.hpp"
#include "httplib.h"
#include "json.hpp"

namespace cmine::embed {

using nlohmann::json;

namespace {

Vector parse_vector(const json& j, std::size_t dim) {
    if (!j.is_array() || j.size() != dim) throw ProtocolError("vector has wrong shape");
    Vector v;
    v.reserve(dim);
    for (const auto& x : j) {
        if (!x.is_number()) throw ProtocolError("non-numeric vector entry");
        const float f = x.get<float>();
        if (!std::isfinite(f)) throw ProtocolError("non-finite vector entry");
        v.push_back(f);
    }
    return v;
}

}  // namespace

HttpEmbedProvider::HttpEmbedProvider(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

Health HttpEmbedProvider::health() {
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    auto res = client.Get("/health");
    if (!res) throw TransportError("GET /health failed: " + httplib::to_string(res.error()));
    if (res->status == 503) throw TransportError("encoder still loading");
    if (res->status != 200) throw ProtocolError("GET /health returned " + std::to_string(res->status));
    auto j = json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("model") || !j.contains("dim") ||
        !j["dim"].is_number_unsigned())
        throw ProtocolError("malformed /health body");
    return {j.value("status", std::string{}), j["model"].get<std::string>(),
            j["dim"].get<std::size_t>()};
}

EmbedResponse HttpEmbedProvider::embed(std::span<const std::string> texts) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    json body;
    body["texts"] = std::vector<std::string>(texts.begin(), texts.end());
    auto res = client.Post("/embed", body.dump(), "application/json");
    if (!res) throw TransportError("POST /embed failed: " + httplib::to_string(res.error()));
    if (res->status >= 500) throw TransportError("POST /embed returned " + std::to_string(res->status));
    if (res->status != 200) throw ProtocolError("POST /embed returned " + std::to_string(res->status));

    auto j = json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("model") || !j.contains("dim") ||
        !j.contains("vectors") || !j["dim"].is_number_unsigned() || !j["vectors"].is_array())
        throw ProtocolError("malformed /embed body");
    EmbedResponse out;
    out.model = j["model"].get<std::string>();
    out.dim = j["dim"].get<std::size_t>();
    for (const auto& v : j["vectors"]) out.vectors.push_back(parse_vector(v, out.dim));
    return out;
}

HashEmbedProvider::HashEmbedProvider(std::size_t dim, std::string model)
    : dim_(dim), model_(std::move(model)) {
    if (dim_ == 0) throw ArgumentError("hash provider needs a positive dimension");
}

EmbedResponse HashEmbedProvider::embed(std::span<const std::string> texts) {
    EmbedResponse out{model_, dim_, {}};
    for (const auto& t : texts) {
        Rng rng(derive_seed(stable_hash(t), model_));
        Vector v(dim_);
        for (auto& x : v) x = static_cast<float>(rng.normal());
        out.vectors.push_back(std::move(v));
    }
    return out;
}

LookupEmbedProvider::LookupEmbedProvider(std::size_t dim, std::string model)
    : dim_(dim), model_(std::move(model)) {}

void LookupEmbedProvider::add(std::string text, Vector v) {
    if (v.size() != dim_) throw ArgumentError("lookup vector has wrong dimension");
    std::lock_guard lock(mutex_);
    table_.insert_or_assign(std::move(text), std::move(v));
}

std::size_t LookupEmbedProvider::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

EmbedResponse LookupEmbedProvider::embed(std::span<const std::string> texts) {
    std::lock_guard lock(mutex_);
    ++calls_;
    EmbedResponse out{model_, dim_, {}};
    for (const auto& t : texts) {
        auto it = table_.find(t);
        if (it == table_.end()) throw ProtocolError("lookup provider has no vector for text");
        out.vectors.push_back(it->second);
    }
    return out;
}

std::unique_ptr<EmbedProvider> make_provider(const std::string& spec) {
    if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0)
        return std::make_unique<HttpEmbedProvider>(spec);
    const std::string hash_prefix = "mock:hash:";
    if (spec.rfind(hash_prefix, 0) == 0) {
        try {
            return std::make_unique<HashEmbedProvider>(std::stoul(spec.substr(hash_prefix.size())));
        } catch (const std::logic_error&) {
            throw ConfigError("bad mock provider dimension in: " + spec);
        }
    }
    throw ConfigError("unsupported provider: " + spec);
}

std::string EmbedCache::key(const std::string& provider, const std::string& model,
                            const std::string& text) {
    std::string material;
    material.reserve(provider.size() + model.size() + text.size() + 2);
    material.append(provider).push_back('\0');
    material.append(model).push_back('\0');
    material.append(text);

    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(material.data(), material.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("crypto_error", "SHA-256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::optional<Vector> EmbedCache::get(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void EmbedCache::put(const std::string& key, Vector v) {
    std::lock_guard lock(mutex_);
    entries_.insert_or_assign(key, std::move(v));
}

std::size_t EmbedCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

Embedder::Embedder(EmbedProvider& provider, EmbedderOptions options,
                   std::shared_ptr<EmbedCache> cache)
    : provider_(provider), options_(options), cache_(std::move(cache)) {
    if (options_.batch_size == 0) options_.batch_size = 1;
    if (options_.max_in_flight == 0) options_.max_in_flight = 1;
    if (options_.max_attempts < 1) options_.max_attempts = 1;
}

EmbedResponse Embedder::call_with_retry(std::span<const std::string> texts) {
    for (int attempt = 1;; ++attempt) {
        try {
            return provider_.embed(texts);
        } catch (const TransportError&) {
            if (attempt >= options_.max_attempts) throw;
            {
                std::lock_guard lock(stats_mutex_);
                ++stats_.retries;
            }
            std::this_thread::sleep_for(options_.backoff_base * (1 << (attempt - 1)));
        }
    }
}

std::vector<Vector> Embedder::embed_batch(std::span<const std::string> texts) {
    if (texts.empty()) throw ArgumentError("embed_batch needs at least one text");

    if (model_.empty()) {
        Health h;
        for (int attempt = 1;; ++attempt) {
            try {
                h = provider_.health();
                break;
            } catch (const TransportError&) {
                if (attempt >= options_.max_attempts) throw;
                std::this_thread::sleep_for(options_.backoff_base * (1 << (attempt - 1)));
            }
        }
        if (options_.expected_dim == 0) options_.expected_dim = h.dim;
        if (h.dim != options_.expected_dim)
            throw ConfigError("provider dimension " + std::to_string(h.dim) +
                              " does not match configured " +
                              std::to_string(options_.expected_dim));
        model_ = h.model;
    }

    std::vector<std::string> keys;
    keys.reserve(texts.size());
    std::vector<std::optional<Vector>> resolved(texts.size());
    std::vector<std::string> missing;
    std::unordered_set<std::string> queued;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        keys.push_back(EmbedCache::key(provider_.id(), model_, texts[i]));
        resolved[i] = cache_->get(keys.back());
        if (resolved[i]) {
            ++stats_.cache_hits;
        } else if (queued.insert(keys.back()).second) {
            missing.push_back(texts[i]);
        }
    }
    stats_.requested += missing.size();

    auto run_chunk = [this](std::size_t begin, std::size_t end,
                            const std::vector<std::string>& src) {
        std::span<const std::string> chunk(src.data() + begin, end - begin);
        EmbedResponse res = call_with_retry(chunk);
        if (res.dim != options_.expected_dim)
            throw ConfigError("provider returned dimension " + std::to_string(res.dim) +
                              ", configured " + std::to_string(options_.expected_dim));
        if (res.model != model_) throw ProtocolError("provider model changed mid-run");
        if (res.vectors.size() != chunk.size())
            throw ProtocolError("provider returned " + std::to_string(res.vectors.size()) +
                                " vectors for " + std::to_string(chunk.size()) + " texts");
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            if (res.vectors[i].size() != res.dim) throw ProtocolError("ragged vector in reply");
            cache_->put(EmbedCache::key(provider_.id(), model_, chunk[i]),
                        std::move(res.vectors[i]));
        }
    };

    std::deque<std::future<void>> in_flight;
    for (std::size_t begin = 0; begin < missing.size(); begin += options_.batch_size) {
        const std::size_t end = std::min(missing.size(), begin + options_.batch_size);
        if (in_flight.size() >= options_.max_in_flight) {
            in_flight.front().get();
            in_flight.pop_front();
        }
        in_flight.push_back(std::async(std::launch::async, run_chunk, begin, end, std::cref(missing)));
    }
    // Drain everything before rethrowing so no task outlives `missing`.
    std::exception_ptr first_error;
    while (!in_flight.empty()) {
        try {
            in_flight.front().get();
        } catch (...) {
            if (!first_error) first_error = std::current_exception();
        }
        in_flight.pop_front();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::vector<Vector> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (resolved[i]) {
            out.push_back(std::move(*resolved[i]));
        } else {
            auto v = cache_->get(keys[i]);
            if (!v) throw ProtocolError("embedding missing after provider call");
            out.push_back(std::move(*v));
        }
    }
    return out;
}

}  // namespace cmine::embed
