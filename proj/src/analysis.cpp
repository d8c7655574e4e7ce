#include "cmine/analysis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "cmine/error.hpp"
#include "cmine/random.hpp"
#include "json.hpp"

namespace cmine::analysis {

using nlohmann::json;

namespace {

Vector parse_vec(const json& j, const std::string& field) {
    if (!j.is_array()) throw FormatError(field + " is not an array");
    Vector v;
    v.reserve(j.size());
    for (const auto& x : j) {
        if (!x.is_number()) throw FormatError(field + " has a non-numeric entry");
        v.push_back(x.get<float>());
    }
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

}  // namespace

std::vector<TranslationPair> read_translation_pairs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open translation pairs: " + path.string());
    std::vector<TranslationPair> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": not a JSON object");
        try {
            TranslationPair p{j.at("id").get<std::string>(), j.at("lang").get<std::string>(),
                              parse_vec(j.at("original_vec"), "original_vec"),
                              parse_vec(j.at("translated_vec"), "translated_vec")};
            if (p.original.size() != p.translated.size())
                throw FormatError("original and translated vectors differ in length");
            out.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_translation_pairs(std::span<const TranslationPair> pairs, const std::filesystem::path& path) {
    auto out = open_out(path);
    for (const auto& p : pairs) {
        nlohmann::ordered_json j;
        j["id"] = p.id;
        j["lang"] = p.lang;
        j["original_vec"] = p.original;
        j["translated_vec"] = p.translated;
        out << j.dump() << '\n';
    }
}

std::map<std::string, double> alignment_resistance(std::span<const TranslationPair> pairs, Metric metric) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const auto& p : pairs) {
        if (p.original.size() != p.translated.size())
            throw ArgumentError("translation pair " + p.id + " has mismatched dimensions");
        auto& [sum, n] = acc[p.lang];
        sum += vecstore::distance(p.original, p.translated, metric);
        ++n;
    }
    std::map<std::string, double> out;
    for (const auto& [lang, a] : acc) out[lang] = a.first / static_cast<double>(a.second);
    return out;
}

ResistanceComparison compare_resistance(std::span<const TranslationPair> cp,
                                        std::span<const TranslationPair> baseline, Metric metric) {
    ResistanceComparison out;
    const auto cp_mean = alignment_resistance(cp, metric);
    const auto base_mean = alignment_resistance(baseline, metric);
    for (const auto& [lang, d] : cp_mean) out.rows.push_back({lang, "cp", d});
    for (const auto& [lang, d] : base_mean) out.rows.push_back({lang, "baseline", d});
    std::sort(out.rows.begin(), out.rows.end(), [](const ResistanceRow& a, const ResistanceRow& b) {
        return a.lang != b.lang ? a.lang < b.lang : a.group > b.group;
    });
    for (const auto& [lang, d] : cp_mean)
        if (auto it = base_mean.find(lang); it != base_mean.end()) out.delta[lang] = d - it->second;
    return out;
}

void write_radar_csv(const ResistanceComparison& cmp, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "lang,group,mean_distance\n";
    for (const auto& r : cmp.rows) out << fmt::format("{},{},{}\n", r.lang, r.group, r.mean_distance);
}

MixingResult mixing_score(const EmbeddingMatrix& sample, std::size_t k_nn) {
    if (k_nn == 0) throw ArgumentError("k_nn must be positive");
    const auto neighbors = geometry::nearest_neighbors(sample, k_nn);
    MixingResult out;
    out.purity.reserve(sample.rows());
    double sum = 0.0;
    for (std::size_t i = 0; i < sample.rows(); ++i) {
        std::size_t same = 0;
        for (const auto& nb : neighbors[i])
            if (sample.lang(nb.row) == sample.lang(i)) ++same;
        const double p = static_cast<double>(same) / static_cast<double>(k_nn);
        out.purity.push_back(p);
        sum += p;
    }
    out.mean = sum / static_cast<double>(sample.rows());
    return out;
}

std::vector<std::size_t> stratified_rows(const EmbeddingMatrix& m, std::span<const std::size_t> rows,
                                         std::size_t per_language, std::uint64_t seed) {
    std::map<std::string, std::vector<std::size_t>> by_lang;
    for (std::size_t r : rows) by_lang[m.lang(r)].push_back(r);
    std::vector<std::size_t> out;
    for (auto& [lang, pool] : by_lang) {
        std::sort(pool.begin(), pool.end());
        const std::size_t take = std::min(per_language, pool.size());
        Rng rng(derive_seed(seed, "stratified:" + lang));
        for (std::size_t i = 0; i < take; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
        out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
    }
    std::sort(out.begin(), out.end());
    return out;
}

MixingReport mixing_report(const EmbeddingMatrix& m, std::span<const std::size_t> cp_rows,
                           std::span<const std::size_t> non_cp_rows, std::size_t per_language,
                           std::size_t k_nn, std::uint64_t seed) {
    MixingReport out;
    auto score = [&](const std::string& group, std::span<const std::size_t> rows) {
        const auto picked = stratified_rows(m, rows, per_language, derive_seed(seed, group));
        const EmbeddingMatrix sample = m.select(picked);
        for (const auto& l : sample.langs()) ++out.sample_sizes[group][l];
        out.group_mean[group] = mixing_score(sample, k_nn).mean;
    };
    score("cp", cp_rows);
    score("non_cp", non_cp_rows);
    return out;
}

void write_projection_csv(const EmbeddingMatrix& m, std::span<const std::size_t> cp_rows,
                          std::span<const std::size_t> non_cp_rows, const std::filesystem::path& path) {
    std::vector<std::size_t> rows(cp_rows.begin(), cp_rows.end());
    rows.insert(rows.end(), non_cp_rows.begin(), non_cp_rows.end());
    auto out = open_out(path);
    out << "id,lang,group,x,y\n";
    if (rows.size() < 2 || m.dim() < 2) return;
    const auto proj = geometry::pca_project(m.select(rows), 2);
    for (std::size_t i = 0; i < rows.size(); ++i)
        out << fmt::format("{},{},{},{},{}\n", m.id(rows[i]), m.lang(rows[i]),
                           i < cp_rows.size() ? "cp" : "non_cp", proj.coords[i][0], proj.coords[i][1]);
}

std::vector<DistributionRow> cp_distribution(std::span<const mining::CulturePoint> cps,
                                             const std::map<std::string, std::size_t>& sampled) {
    std::map<std::string, DistributionRow> rows;
    for (const auto& [lang, n] : sampled) rows[lang] = {lang, 0, n, 0.0};
    for (const auto& cp : cps) {
        auto& r = rows[cp.lang];
        r.lang = cp.lang;
        ++r.cp_count;
    }
    std::vector<DistributionRow> out;
    for (auto& [lang, r] : rows) {
        r.yield = r.sampled == 0 ? 0.0 : static_cast<double>(r.cp_count) / static_cast<double>(r.sampled);
        out.push_back(r);
    }
    return out;
}

void write_distribution_csv(std::span<const DistributionRow> rows, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "lang,cp_count,sampled,yield\n";
    for (const auto& r : rows) out << fmt::format("{},{},{},{}\n", r.lang, r.cp_count, r.sampled, r.yield);
}

}  // namespace cmine::analysis
