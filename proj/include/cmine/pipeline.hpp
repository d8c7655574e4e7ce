#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cmine/corpus.hpp"
#include "cmine/embed.hpp"
#include "cmine/mining.hpp"
#include "json.hpp"

namespace cmine::mining {

struct PipelineInputs {
    std::map<std::string, std::filesystem::path> corpora;  // lang -> JSONL
    std::map<std::string, std::size_t> quotas;
    std::set<std::string> blocklist = corpus::default_blocklist();
    std::uint64_t sample_seed = 7;

    // Exactly one vector source: a provider, or pre-computed vector files.
    embed::EmbedProvider* provider = nullptr;
    embed::EmbedderOptions embedder;
    std::filesystem::path sequence_vectors;
    std::filesystem::path unit_vectors;

    MiningConfig mining;
};

// Per-stage counts, warnings and the effective configuration. Deliberately free of
// timing so that identical runs serialise to identical bytes.
struct RunReport {
    nlohmann::ordered_json config;
    std::map<std::string, std::size_t> loaded;
    std::map<std::string, std::size_t> malformed;
    std::map<std::string, std::size_t> sampled;
    std::map<std::string, std::size_t> pruned;
    std::size_t embedded_sequences = 0;
    std::size_t embedded_units = 0;
    std::map<std::string, std::size_t> stage1_clusters;
    std::map<std::string, std::size_t> candidates;
    std::size_t stage2_k = 0;
    std::size_t stage2_clusters_nonempty = 0;
    std::size_t selected_clusters = 0;
    std::map<std::string, std::size_t> culture_points;
    std::vector<std::string> warnings;
    std::string failed_stage;
    std::string error;

    nlohmann::ordered_json to_json() const;
};

struct EmbeddedCorpus {
    vecstore::EmbeddingMatrix sequences;
    vecstore::EmbeddingMatrix units;
};

struct PipelineResult {
    std::vector<CulturePoint> culture_points;
    RunReport report;
    corpus::DocumentSet documents;  // after sampling and pruning
    EmbeddedCorpus vectors;
    CandidateSet candidates;
    Stage2Result stage2;
    std::map<std::string, double> stage_seconds;
};

// load -> sample -> prune -> embed -> stage 1 -> stage 2 -> extract.
// Throws StageError naming the failed stage; `partial` receives what was done.
PipelineResult run_pipeline(const PipelineInputs& inputs, RunReport* partial = nullptr);

// Embeds a document set's sequences and paragraph units.
EmbeddedCorpus embed_corpus(const corpus::DocumentSet& docs, embed::Embedder& embedder);

}  // namespace cmine::mining
