#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmine/geometry.hpp"
#include "cmine/mining.hpp"
#include "cmine/vecstore.hpp"

namespace cmine::analysis {

using vecstore::EmbeddingMatrix;
using vecstore::Metric;
using vecstore::Vector;

struct TranslationPair {
    std::string id;
    std::string lang;
    Vector original;
    Vector translated;
};

// {"id","lang","original_vec":[...],"translated_vec":[...]} per line.
std::vector<TranslationPair> read_translation_pairs(const std::filesystem::path& path);
void write_translation_pairs(std::span<const TranslationPair> pairs,
                             const std::filesystem::path& path);

// Mean original-to-translation distance per language.
std::map<std::string, double> alignment_resistance(std::span<const TranslationPair> pairs,
                                                   Metric metric = Metric::cosine);

struct ResistanceRow {
    std::string lang;
    std::string group;  // "cp" or "baseline"
    double mean_distance = 0.0;
};

struct ResistanceComparison {
    std::vector<ResistanceRow> rows;
    std::map<std::string, double> delta;  // cp - baseline, languages present in both
};

ResistanceComparison compare_resistance(std::span<const TranslationPair> cp,
                                        std::span<const TranslationPair> baseline,
                                        Metric metric = Metric::cosine);

void write_radar_csv(const ResistanceComparison& cmp, const std::filesystem::path& path);

struct MixingResult {
    std::vector<double> purity;  // per row
    double mean = 0.0;
};

// Fraction of each row's k_nn Euclidean neighbours that share its language.
// Throws ArgumentError when rows <= k_nn.
MixingResult mixing_score(const EmbeddingMatrix& sample, std::size_t k_nn = 10);

struct MixingReport {
    std::map<std::string, double> group_mean;  // "cp" / "non_cp"
    std::map<std::string, std::map<std::string, std::size_t>> sample_sizes;  // group -> lang -> n
};

// Seeded sample of up to `per_language` rows per language from the given rows.
std::vector<std::size_t> stratified_rows(const EmbeddingMatrix& m,
                                         std::span<const std::size_t> rows,
                                         std::size_t per_language, std::uint64_t seed);

inline constexpr std::size_t k_projection_sample_per_language = 300;

// Scores each group on its own stratified sample.
MixingReport mixing_report(const EmbeddingMatrix& m, std::span<const std::size_t> cp_rows,
                           std::span<const std::size_t> non_cp_rows, std::size_t per_language,
                           std::size_t k_nn, std::uint64_t seed);

// id,lang,group,x,y for the combined sample, projected jointly to 2-D.
void write_projection_csv(const EmbeddingMatrix& m, std::span<const std::size_t> cp_rows,
                          std::span<const std::size_t> non_cp_rows,
                          const std::filesystem::path& path);

struct DistributionRow {
    std::string lang;
    std::size_t cp_count = 0;
    std::size_t sampled = 0;
    double yield = 0.0;
};

// Counts per language over the union of CP languages and sampled languages.
std::vector<DistributionRow> cp_distribution(std::span<const mining::CulturePoint> cps,
                                             const std::map<std::string, std::size_t>& sampled);

void write_distribution_csv(std::span<const DistributionRow> rows,
                            const std::filesystem::path& path);

}  // namespace cmine::analysis
