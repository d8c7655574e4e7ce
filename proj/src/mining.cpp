#include "cmine/mining.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "cmine/error.hpp"
#include "cmine/parallel.hpp"
#include "cmine/random.hpp"

namespace cmine::mining {

using nlohmann::json;
using nlohmann::ordered_json;

void MiningConfig::validate() const {
    if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("theta must be in (0, 1]");
    if (tau < 1) throw ConfigError("tau must be >= 1");
    if (!(entropy_keep_fraction > 0.0 && entropy_keep_fraction <= 1.0))
        throw ConfigError("entropy_keep_fraction must be in (0, 1]");
    if (k_stage1 < 1 || k_stage2 < 1) throw ConfigError("cluster counts must be >= 1");
    if (min_mean_cluster_size < 1) throw ConfigError("min_mean_cluster_size must be >= 1");
    if (k_nn < 1) throw ConfigError("k_nn must be >= 1");
    if (central_n < 1) throw ConfigError("central_n must be >= 1");
    if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (!(tol >= 0.0)) throw ConfigError("tol must be non-negative");
}

void to_json(ordered_json& j, const MiningConfig& c) {
    j = ordered_json{{"k_stage1", c.k_stage1},
                     {"k_stage2", c.k_stage2},
                     {"min_mean_cluster_size", c.min_mean_cluster_size},
                     {"k_nn", c.k_nn},
                     {"tau", c.tau},
                     {"theta", c.theta},
                     {"entropy_keep_fraction", c.entropy_keep_fraction},
                     {"central_n", c.central_n},
                     {"max_iter", c.max_iter},
                     {"tol", c.tol},
                     {"seed_stage1", c.seed_stage1},
                     {"seed_stage2", c.seed_stage2}};
}

void from_json(const ordered_json& j, MiningConfig& c) {
    c.k_stage1 = j.value("k_stage1", c.k_stage1);
    c.k_stage2 = j.value("k_stage2", c.k_stage2);
    c.min_mean_cluster_size = j.value("min_mean_cluster_size", c.min_mean_cluster_size);
    c.k_nn = j.value("k_nn", c.k_nn);
    c.tau = j.value("tau", c.tau);
    c.theta = j.value("theta", c.theta);
    c.entropy_keep_fraction = j.value("entropy_keep_fraction", c.entropy_keep_fraction);
    c.central_n = j.value("central_n", c.central_n);
    c.max_iter = j.value("max_iter", c.max_iter);
    c.tol = j.value("tol", c.tol);
    c.seed_stage1 = j.value("seed_stage1", c.seed_stage1);
    c.seed_stage2 = j.value("seed_stage2", c.seed_stage2);
}

std::size_t effective_k(std::size_t configured, std::size_t rows, std::size_t min_mean) {
    if (rows == 0) return 0;
    const std::size_t by_size = std::max<std::size_t>(1, rows / std::max<std::size_t>(1, min_mean));
    return std::min({configured, by_size, rows});
}

UnitIndex group_units(const EmbeddingMatrix& unit_vectors) {
    // Collect (unit index, row) per document so units keep their paragraph order.
    std::unordered_map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> order;
    for (std::size_t r = 0; r < unit_vectors.rows(); ++r) {
        const std::string& id = unit_vectors.id(r);
        const auto hash = id.rfind('#');
        if (hash == std::string::npos || hash + 1 == id.size())
            throw FormatError("unit vector id without '#<index>': " + id);
        std::size_t idx = 0;
        try {
            idx = std::stoul(id.substr(hash + 1));
        } catch (const std::logic_error&) {
            throw FormatError("unit vector id with bad index: " + id);
        }
        order[id.substr(0, hash)].emplace_back(idx, r);
    }
    UnitIndex out;
    for (auto& [doc, rows] : order) {
        std::sort(rows.begin(), rows.end());
        auto& units = out[doc];
        for (const auto& [idx, r] : rows) units.emplace_back(unit_vectors.row(r).begin(), unit_vectors.row(r).end());
    }
    return out;
}

namespace {

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Documents without paragraph units score zero coherence.
double entry_entropy(const ClusterEntry& e) {
    return e.units.empty() ? 0.0 : geometry::coherence_entropy(e.units);
}

}  // namespace

Stage1Outcome stage1_filter(std::span<const ClusterEntry> entries, const MiningConfig& cfg) {
    const std::size_t n = entries.size();
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    Stage1Outcome out;
    out.delta.assign(n, nan);
    out.entropy.assign(n, nan);
    if (n == 0) return out;

    if (n < cfg.k_nn + 2) {
        out.bypassed = true;
        out.warnings.push_back("cluster of " + std::to_string(n) + " entries is below k_nn+2=" +
                               std::to_string(cfg.k_nn + 2) + "; passed through unfiltered");
        for (std::size_t i = 0; i < n; ++i) {
            out.entropy[i] = entry_entropy(entries[i]);
            out.retained.push_back(i);
        }
        return out;
    }

    EmbeddingMatrix m(entries[0].vector.size());
    for (std::size_t i = 0; i < n; ++i) m.append(std::to_string(i), "", entries[i].vector);
    out.delta = geometry::local_dispersion(m, cfg.k_nn);
    const double cut = median(out.delta);

    std::vector<std::size_t> dense;
    for (std::size_t i = 0; i < n; ++i)
        if (out.delta[i] < cut) dense.push_back(i);
    if (dense.empty()) {
        out.warnings.push_back("cluster of " + std::to_string(n) +
                               " entries has no dispersion strictly below its median; nothing retained");
        return out;
    }

    std::vector<double> scores;
    scores.reserve(dense.size());
    for (std::size_t i : dense) {
        out.entropy[i] = entry_entropy(entries[i]);
        scores.push_back(out.entropy[i]);
    }
    const auto keep = static_cast<std::size_t>(
        std::floor(cfg.entropy_keep_fraction * static_cast<double>(dense.size())));
    if (keep == 0) return out;
    std::sort(scores.begin(), scores.end(), std::greater<>());
    const double threshold = scores[keep - 1];
    for (std::size_t i : dense)
        if (out.entropy[i] >= threshold) out.retained.push_back(i);
    return out;
}

namespace {

ordered_json number_or_null(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(); }

double number_or_nan(const json& j) {
    return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

struct LanguageStage1 {
    std::vector<std::size_t> rows;  // into the sequence matrix
    std::vector<Candidate> candidates;
    std::size_t clusters = 0;
    std::vector<std::string> warnings;
};

LanguageStage1 stage1_language(const std::string& lang, const std::vector<std::size_t>& rows,
                               const EmbeddingMatrix& sequences, const UnitIndex& units,
                               const MiningConfig& cfg) {
    LanguageStage1 out;
    const EmbeddingMatrix sub = sequences.select(rows);
    if (sub.rows() < cfg.k_stage1)
        out.warnings.push_back("language " + lang + " has " + std::to_string(sub.rows()) +
                               " documents, fewer than k_stage1=" + std::to_string(cfg.k_stage1) +
                               "; k clamped");
    const std::size_t k = effective_k(cfg.k_stage1, sub.rows(), cfg.min_mean_cluster_size);
    out.clusters = k;
    geometry::KMeansOptions opts{cfg.max_iter, cfg.tol, 1};
    const auto clusters = geometry::kmeans(sub, k, derive_seed(cfg.seed_stage1, "stage1:" + lang), opts);

    static const std::vector<Vector> no_units;
    std::vector<std::pair<std::size_t, Candidate>> kept;
    for (const auto& members : clusters.members()) {
        std::vector<ClusterEntry> entries;
        entries.reserve(members.size());
        for (std::size_t local : members) {
            auto it = units.find(sub.id(local));
            const auto& u = it == units.end() ? no_units : it->second;
            entries.push_back({sub.id(local), sub.row(local), u});
        }
        auto outcome = stage1_filter(entries, cfg);
        for (auto& w : outcome.warnings) out.warnings.push_back(lang + ": " + w);
        for (std::size_t i : outcome.retained)
            kept.emplace_back(members[i], Candidate{sub.id(members[i]), lang, outcome.delta[i],
                                                    outcome.entropy[i]});
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [local, c] : kept) {
        out.rows.push_back(rows[local]);
        out.candidates.push_back(std::move(c));
    }
    return out;
}

}  // namespace

CandidateSet run_stage1(const corpus::DocumentSet& docs, const EmbeddingMatrix& sequences,
                        const UnitIndex& units, const MiningConfig& cfg) {
    cfg.validate();
    CandidateSet out;
    out.config = cfg;
    out.vectors = EmbeddingMatrix(sequences.dim());

    std::map<std::string, std::vector<std::size_t>> rows_by_lang;
    for (const auto& d : docs.docs()) {
        const std::size_t r = sequences.find(d.id);
        if (r == EmbeddingMatrix::npos) throw ArgumentError("no sequence vector for document " + d.id);
        rows_by_lang[d.lang].push_back(r);
    }
    std::vector<std::string> langs;
    for (const auto& [lang, rows] : rows_by_lang) {
        langs.push_back(lang);
        out.input_per_language[lang] = rows.size();
    }

    std::vector<LanguageStage1> results(langs.size());
    parallel_for(langs.size(), cfg.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            results[i] = stage1_language(langs[i], rows_by_lang.at(langs[i]), sequences, units, cfg);
    });

    for (std::size_t i = 0; i < langs.size(); ++i) {
        auto& r = results[i];
        out.clusters_per_language[langs[i]] = r.clusters;
        out.per_language[langs[i]] = r.candidates.size();
        for (std::size_t c = 0; c < r.candidates.size(); ++c) {
            out.vectors.append(r.candidates[c].id, langs[i], sequences.row(r.rows[c]));
            out.entries.push_back(std::move(r.candidates[c]));
        }
        for (auto& w : r.warnings) out.warnings.push_back(std::move(w));
    }
    return out;
}

void write_candidates(const CandidateSet& set, const std::filesystem::path& path) {
    ordered_json j;
    ordered_json cfg;
    to_json(cfg, set.config);
    j["config"] = cfg;
    j["input_per_language"] = set.input_per_language;
    j["per_language"] = set.per_language;
    j["clusters_per_language"] = set.clusters_per_language;
    j["warnings"] = set.warnings;
    auto& entries = j["entries"] = ordered_json::array();
    for (const auto& c : set.entries)
        entries.push_back(ordered_json{{"id", c.id},
                                       {"lang", c.lang},
                                       {"delta", number_or_null(c.delta)},
                                       {"entropy", number_or_null(c.entropy)}});
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write candidates: " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

CandidateSet read_candidates(const std::filesystem::path& path, const EmbeddingMatrix& sequences) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open candidates: " + path.string());
    ordered_json j = ordered_json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("entries"))
        throw FormatError("malformed candidate file: " + path.string());
    CandidateSet out;
    from_json(j.at("config"), out.config);
    out.input_per_language = j.value("input_per_language", std::map<std::string, std::size_t>{});
    out.per_language = j.value("per_language", std::map<std::string, std::size_t>{});
    out.clusters_per_language = j.value("clusters_per_language", std::map<std::string, std::size_t>{});
    out.warnings = j.value("warnings", std::vector<std::string>{});
    out.vectors = EmbeddingMatrix(sequences.dim());
    for (const auto& e : j["entries"]) {
        Candidate c{e.at("id").get<std::string>(), e.at("lang").get<std::string>(),
                    number_or_nan(e.at("delta")), number_or_nan(e.at("entropy"))};
        const std::size_t r = sequences.find(c.id);
        if (r == EmbeddingMatrix::npos) throw FormatError("candidate without vector: " + c.id);
        out.vectors.append(c.id, c.lang, sequences.row(r));
        out.entries.push_back(std::move(c));
    }
    return out;
}

Dominance dominance(std::span<const std::string> cluster_langs) {
    if (cluster_langs.empty()) throw ArgumentError("dominance of an empty cluster");
    std::map<std::string, std::size_t> counts;
    for (const auto& l : cluster_langs) ++counts[l];
    Dominance d;
    d.size = cluster_langs.size();
    for (const auto& [lang, n] : counts)
        if (n > d.modal_count) {
            d.modal_count = n;
            d.lang = lang;
        }
    d.gamma = static_cast<double>(d.modal_count) / static_cast<double>(d.size);
    return d;
}

bool is_culture_cluster(const Dominance& d, std::size_t tau, double theta) {
    return d.size >= tau && d.gamma > theta;
}

std::vector<SelectedCluster> select_culture_clusters(const geometry::ClusterAssignment& g,
                                                     std::span<const std::string> row_langs,
                                                     const MiningConfig& cfg) {
    if (row_langs.size() != g.assign.size())
        throw ArgumentError("language list does not match the clustering");
    std::vector<SelectedCluster> out;
    const auto members = g.members();
    for (std::size_t c = 0; c < members.size(); ++c) {
        if (members[c].size() < cfg.tau) continue;
        std::vector<std::string> langs;
        langs.reserve(members[c].size());
        for (std::size_t r : members[c]) langs.push_back(row_langs[r]);
        const Dominance d = dominance(langs);
        if (is_culture_cluster(d, cfg.tau, cfg.theta)) out.push_back({c, d.lang, d.gamma, d.size});
    }
    return out;
}

std::vector<RankedEntry> rank_central(const EmbeddingMatrix& m, std::span<const std::size_t> members,
                                      std::span<const float> centroid, std::size_t n) {
    std::vector<RankedEntry> ranked;
    ranked.reserve(members.size());
    for (std::size_t r : members)
        ranked.push_back({r, m.id(r), std::sqrt(vecstore::squared_euclidean(m.row(r), centroid))});
    std::sort(ranked.begin(), ranked.end(), [](const RankedEntry& a, const RankedEntry& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
    });
    if (ranked.size() > n) ranked.resize(n);
    return ranked;
}

ordered_json to_json(const CulturePoint& cp) {
    return ordered_json{{"id", cp.id},
                        {"title", cp.title},
                        {"leading_paragraph", cp.leading_paragraph},
                        {"lang", cp.lang},
                        {"cluster_id", cp.cluster_id},
                        {"gamma", cp.gamma},
                        {"cluster_size", cp.cluster_size},
                        {"centrality_rank", cp.centrality_rank}};
}

CulturePoint culture_point_from_json(const json& j) {
    CulturePoint cp;
    cp.id = j.at("id").get<std::string>();
    cp.title = j.at("title").get<std::string>();
    cp.leading_paragraph = j.at("leading_paragraph").get<std::string>();
    cp.lang = j.at("lang").get<std::string>();
    cp.cluster_id = j.at("cluster_id").get<std::size_t>();
    cp.gamma = j.at("gamma").get<double>();
    cp.cluster_size = j.at("cluster_size").get<std::size_t>();
    cp.centrality_rank = j.at("centrality_rank").get<std::size_t>();
    return cp;
}

void write_culture_points(std::span<const CulturePoint> cps, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write culture points: " + path.string());
    for (const auto& cp : cps) out << to_json(cp).dump() << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<CulturePoint> read_culture_points(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open culture points: " + path.string());
    std::vector<CulturePoint> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(culture_point_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

Stage2Result reselect(const Stage2Result& clustered, const CandidateSet& candidates,
                      const corpus::DocumentSet& docs, const MiningConfig& cfg) {
    cfg.validate();
    Stage2Result out;
    out.clusters = clustered.clusters;
    out.k_effective = clustered.k_effective;
    if (candidates.entries.empty()) return out;

    std::unordered_map<std::string, const corpus::Document*> by_id;
    for (const auto& d : docs.docs()) by_id.emplace(d.id, &d);

    out.selected = select_culture_clusters(out.clusters, candidates.vectors.langs(), cfg);
    const auto members = out.clusters.members();
    for (const auto& sel : out.selected) {
        const auto& rows = members[sel.cluster_id];
        const auto ranked = rank_central(candidates.vectors, rows, out.clusters.centroids[sel.cluster_id],
                                         rows.size());
        for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
            const std::size_t r = ranked[rank].row;
            if (candidates.vectors.lang(r) != sel.lang) continue;
            auto it = by_id.find(ranked[rank].id);
            if (it == by_id.end()) throw ArgumentError("candidate without document: " + ranked[rank].id);
            const corpus::Document& d = *it->second;
            out.culture_points.push_back({d.id, d.title, d.paragraphs.empty() ? "" : d.paragraphs.front(),
                                          d.lang, sel.cluster_id, sel.gamma, sel.size, rank + 1});
        }
    }
    return out;
}

Stage2Result run_stage2(const CandidateSet& candidates, const corpus::DocumentSet& docs,
                        const MiningConfig& cfg) {
    cfg.validate();
    Stage2Result clustered;
    if (candidates.entries.empty()) return clustered;
    clustered.k_effective = effective_k(cfg.k_stage2, candidates.vectors.rows(), cfg.min_mean_cluster_size);
    geometry::KMeansOptions opts{cfg.max_iter, cfg.tol, cfg.workers};
    clustered.clusters = geometry::kmeans(candidates.vectors, clustered.k_effective, cfg.seed_stage2, opts);
    return reselect(clustered, candidates, docs, cfg);
}

}  // namespace cmine::mining
