#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cmine/corpus.hpp"
#include "cmine/geometry.hpp"
#include "cmine/vecstore.hpp"
#include "json.hpp"

namespace cmine::mining {

using vecstore::EmbeddingMatrix;
using vecstore::Vector;

struct MiningConfig {
    // Upper bounds on cluster counts; see effective_k.
    std::size_t k_stage1 = 256;
    std::size_t k_stage2 = 1024;
    // Smallest mean cluster size a clustering may be asked for.
    std::size_t min_mean_cluster_size = 64;
    std::size_t k_nn = 5;
    std::size_t tau = 5;
    double theta = 0.8;
    double entropy_keep_fraction = 0.5;
    std::size_t central_n = 10;
    std::size_t max_iter = 100;
    double tol = 1e-4;
    std::uint64_t seed_stage1 = 17;
    std::uint64_t seed_stage2 = 29;
    std::size_t workers = 1;

    // Throws ConfigError when an invariant is violated.
    void validate() const;
};

void to_json(nlohmann::ordered_json& j, const MiningConfig& c);
void from_json(const nlohmann::ordered_json& j, MiningConfig& c);

// min(configured, rows / min_mean), at least 1 and never above rows.
std::size_t effective_k(std::size_t configured, std::size_t rows, std::size_t min_mean);

// Paragraph vectors grouped by document id from rows named "<doc id>#<unit index>".
using UnitIndex = std::unordered_map<std::string, std::vector<Vector>>;
UnitIndex group_units(const EmbeddingMatrix& unit_vectors);

struct ClusterEntry {
    std::string id;
    std::span<const float> vector;
    std::span<const Vector> units;
};

struct Stage1Outcome {
    std::vector<std::size_t> retained;  // indices into the input, ascending
    std::vector<double> delta;          // per input entry; NaN when bypassed
    std::vector<double> entropy;        // per input entry; NaN when not computed
    bool bypassed = false;
    std::vector<std::string> warnings;
};

// Density filter (delta strictly below the cluster median) followed by the
// coherence cut (top entropy_keep_fraction of survivors by entropy, ties kept).
// Clusters smaller than k_nn + 2 pass through unfiltered.
Stage1Outcome stage1_filter(std::span<const ClusterEntry> entries, const MiningConfig& cfg);

struct Candidate {
    std::string id;
    std::string lang;
    double delta = 0.0;
    double entropy = 0.0;
};

struct CandidateSet {
    std::vector<Candidate> entries;
    EmbeddingMatrix vectors;  // row i belongs to entries[i]
    MiningConfig config;
    std::map<std::string, std::size_t> input_per_language;
    std::map<std::string, std::size_t> per_language;
    std::map<std::string, std::size_t> clusters_per_language;
    std::vector<std::string> warnings;
};

void write_candidates(const CandidateSet& set, const std::filesystem::path& path);
// Vectors are re-attached from the sequence matrix by id.
CandidateSet read_candidates(const std::filesystem::path& path, const EmbeddingMatrix& sequences);

// Per language: K-Means, then stage1_filter per cluster; survivors are unioned.
CandidateSet run_stage1(const corpus::DocumentSet& docs, const EmbeddingMatrix& sequences,
                        const UnitIndex& units, const MiningConfig& cfg);

struct Dominance {
    std::string lang;
    double gamma = 0.0;
    std::size_t modal_count = 0;
    std::size_t size = 0;
};

// Modal language (ties broken lexicographically) and its share.
// Throws ArgumentError on an empty cluster.
Dominance dominance(std::span<const std::string> cluster_langs);

// Stability and dominance rule for one cluster.
bool is_culture_cluster(const Dominance& d, std::size_t tau, double theta);

struct SelectedCluster {
    std::size_t cluster_id = 0;
    std::string lang;
    double gamma = 0.0;
    std::size_t size = 0;
};

// Clusters with size >= tau and gamma > theta, ascending by id.
std::vector<SelectedCluster> select_culture_clusters(const geometry::ClusterAssignment& g,
                                                     std::span<const std::string> row_langs,
                                                     const MiningConfig& cfg);

struct RankedEntry {
    std::size_t row = 0;
    std::string id;
    double distance = 0.0;
};

// Members ordered by ascending distance to the centroid, ties by id; at most n.
std::vector<RankedEntry> rank_central(const EmbeddingMatrix& m,
                                      std::span<const std::size_t> members,
                                      std::span<const float> centroid, std::size_t n);

struct CulturePoint {
    std::string id;
    std::string title;
    std::string leading_paragraph;
    std::string lang;
    std::size_t cluster_id = 0;
    double gamma = 0.0;
    std::size_t cluster_size = 0;
    std::size_t centrality_rank = 0;  // 1-based within the whole cluster

    bool operator==(const CulturePoint&) const = default;
};

nlohmann::ordered_json to_json(const CulturePoint& cp);
CulturePoint culture_point_from_json(const nlohmann::json& j);

void write_culture_points(std::span<const CulturePoint> cps, const std::filesystem::path& path);
std::vector<CulturePoint> read_culture_points(const std::filesystem::path& path);

struct Stage2Result {
    geometry::ClusterAssignment clusters;
    std::size_t k_effective = 0;
    std::vector<SelectedCluster> selected;
    std::vector<CulturePoint> culture_points;
};

// Global clustering of the candidates (sequence vectors reused as the shared space)
// and extraction of the dominant-language members of every selected cluster.
Stage2Result run_stage2(const CandidateSet& candidates, const corpus::DocumentSet& docs,
                        const MiningConfig& cfg);

// Re-applies selection to an existing clustering, e.g. for a threshold sweep.
Stage2Result reselect(const Stage2Result& clustered, const CandidateSet& candidates,
                      const corpus::DocumentSet& docs, const MiningConfig& cfg);

}  // namespace cmine::mining
