#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "cmine/embed.hpp"
#include "cmine/mining.hpp"
#include "json.hpp"

namespace cmine::cli {

// Flat key/value view of a config file: `key = value`, `# comments`, optional
// `[section]` headers that prefix following keys with "section.".
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);

// Env lookup, injectable for tests.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

// "mining.theta" -> "CMINE_MINING_THETA".
std::string env_name(const std::string& key);

struct SynthSettings {
    std::size_t n = 10;
    std::size_t per_type = 1;
    std::string client = "mock";  // mock | replay
    std::filesystem::path responses;
    std::size_t max_in_flight = 4;
    std::size_t timeout_ms = 120000;
};

struct AnalyzeSettings {
    std::filesystem::path pairs_cp;
    std::filesystem::path pairs_baseline;
    std::string metric = "cosine";
    std::size_t k_nn = 10;
    std::size_t per_language = 300;
    std::uint64_t seed = 11;
};

struct RunConfig {
    std::map<std::string, std::filesystem::path> corpora;
    std::map<std::string, std::size_t> quotas;
    std::set<std::string> blocklist;
    std::string provider;
    std::filesystem::path vectors;
    std::filesystem::path unit_vectors;
    std::size_t embed_dim = 0;
    std::size_t embed_batch = 64;
    std::size_t embed_in_flight = 4;
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 7;
    mining::MiningConfig mining;
    SynthSettings synth;
    AnalyzeSettings analyze;
    std::string log_level = "info";

    // Exactly one vector source, resolvable corpus paths, valid mining thresholds.
    void validate() const;
    nlohmann::ordered_json to_json() const;
};

std::map<std::string, std::size_t> default_quotas();

// Relative paths are resolved against `base_dir`. Unknown keys are a ConfigError.
RunConfig parse_config(const KeyValues& kv, const std::filesystem::path& base_dir,
                       const EnvLookup& env);
RunConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env());

// Renders a config file that parse_config reads back to the same effective config.
std::string render_config(const RunConfig& cfg);

}  // namespace cmine::cli
