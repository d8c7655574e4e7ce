#include "cmine/pipeline.hpp"

#include <spdlog/spdlog.h>

#include "cmine/error.hpp"

namespace cmine::mining {

using nlohmann::ordered_json;

ordered_json RunReport::to_json() const {
    ordered_json j;
    j["config"] = config;
    j["stages"] = ordered_json{{"loaded", loaded},
                               {"malformed", malformed},
                               {"sampled", sampled},
                               {"pruned", pruned},
                               {"embedded_sequences", embedded_sequences},
                               {"embedded_units", embedded_units},
                               {"stage1_clusters", stage1_clusters},
                               {"candidates", candidates},
                               {"stage2_k", stage2_k},
                               {"stage2_clusters_nonempty", stage2_clusters_nonempty},
                               {"selected_clusters", selected_clusters}};
    j["culture_points"] = culture_points;
    std::size_t total = 0;
    for (const auto& [lang, n] : culture_points) total += n;
    j["culture_points_total"] = total;
    j["warnings"] = warnings;
    if (!failed_stage.empty()) j["failure"] = ordered_json{{"stage", failed_stage}, {"error", error}};
    return j;
}

EmbeddedCorpus embed_corpus(const corpus::DocumentSet& docs, embed::Embedder& embedder) {
    std::vector<std::string> sequences;
    std::vector<std::string> units;
    std::vector<std::pair<std::size_t, std::size_t>> unit_owner;  // (doc index, unit index)
    for (std::size_t i = 0; i < docs.docs().size(); ++i) {
        const auto& d = docs.docs()[i];
        sequences.push_back(corpus::make_sequence(d));
        const auto segs = corpus::segment_units(d);
        for (std::size_t u = 0; u < segs.size(); ++u) {
            units.push_back(segs[u]);
            unit_owner.emplace_back(i, u);
        }
    }
    EmbeddedCorpus out;
    if (sequences.empty()) return out;
    auto seq_vecs = embedder.embed_batch(sequences);
    const std::size_t dim = seq_vecs.front().size();
    out.sequences = vecstore::EmbeddingMatrix(dim);
    out.units = vecstore::EmbeddingMatrix(dim);
    for (std::size_t i = 0; i < seq_vecs.size(); ++i)
        out.sequences.append(docs.docs()[i].id, docs.docs()[i].lang, seq_vecs[i]);
    if (!units.empty()) {
        auto unit_vecs = embedder.embed_batch(units);
        for (std::size_t i = 0; i < unit_vecs.size(); ++i) {
            const auto& d = docs.docs()[unit_owner[i].first];
            out.units.append(d.id + "#" + std::to_string(unit_owner[i].second), d.lang, unit_vecs[i]);
        }
    }
    return out;
}

namespace {

template <typename Fn>
auto timed(const char* stage, std::map<std::string, double>& seconds, RunReport& report, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    spdlog::info("stage {} started", stage);
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            seconds[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        } else {
            auto r = fn();
            seconds[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            return r;
        }
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        report.failed_stage = stage;
        report.error = e.what();
        throw StageError(stage, e.what());
    }
}

}  // namespace

PipelineResult run_pipeline(const PipelineInputs& in, RunReport* partial) {
    PipelineResult result;
    RunReport& report = result.report;
    auto& secs = result.stage_seconds;

    {
        ordered_json cfg;
        ordered_json corpora = ordered_json::object();
        for (const auto& [lang, path] : in.corpora) corpora[lang] = path.generic_string();
        cfg["corpora"] = corpora;
        cfg["quotas"] = in.quotas;
        cfg["blocklist"] = in.blocklist;
        cfg["sample_seed"] = in.sample_seed;
        cfg["provider"] = in.provider ? in.provider->id() : std::string{};
        cfg["sequence_vectors"] = in.sequence_vectors.generic_string();
        cfg["unit_vectors"] = in.unit_vectors.generic_string();
        ordered_json mining;
        to_json(mining, in.mining);
        cfg["mining"] = mining;
        report.config = cfg;
    }

    try {
        timed("config", secs, report, [&] {
            in.mining.validate();
            const bool has_provider = in.provider != nullptr;
            const bool has_files = !in.sequence_vectors.empty();
            if (has_provider == has_files)
                throw ConfigError("exactly one of a provider or a vector file is required");
        });

        corpus::DocumentSet loaded = timed("load", secs, report, [&] {
            std::vector<corpus::DocumentSet> sets;
            for (const auto& [lang, path] : in.corpora) {
                auto r = corpus::load_corpus(path, lang);
                report.loaded[lang] += r.set.size();
                report.malformed[lang] += r.skipped;
                if (r.skipped > 0)
                    report.warnings.push_back(lang + ": skipped " + std::to_string(r.skipped) +
                                              " malformed lines in " + path.string());
                sets.push_back(std::move(r.set));
            }
            return corpus::DocumentSet::merge(sets);
        });

        corpus::DocumentSet sampled = timed("sample", secs, report, [&] {
            auto s = corpus::stratified_sample(loaded, in.quotas, in.sample_seed);
            for (const auto& lang : s.short_languages)
                report.warnings.push_back("quota for " + lang + " exceeds available documents");
            for (const auto& [lang, n] : s.set.counts()) report.sampled[lang] = n;
            return std::move(s.set);
        });

        result.documents = timed("prune", secs, report, [&] {
            auto p = corpus::prune_by_category(sampled, in.blocklist);
            for (const auto& [lang, n] : p.counts()) report.pruned[lang] = n;
            return p;
        });

        result.vectors = timed("embed", secs, report, [&] {
            EmbeddedCorpus e;
            if (in.provider) {
                embed::Embedder embedder(*in.provider, in.embedder);
                e = embed_corpus(result.documents, embedder);
            } else {
                e.sequences = vecstore::read_vectors(in.sequence_vectors);
                if (!in.unit_vectors.empty()) e.units = vecstore::read_vectors(in.unit_vectors);
            }
            report.embedded_sequences = e.sequences.rows();
            report.embedded_units = e.units.rows();
            return e;
        });

        result.candidates = timed("stage1", secs, report, [&] {
            const UnitIndex units = group_units(result.vectors.units);
            auto c = run_stage1(result.documents, result.vectors.sequences, units, in.mining);
            report.stage1_clusters = c.clusters_per_language;
            report.candidates = c.per_language;
            report.warnings.insert(report.warnings.end(), c.warnings.begin(), c.warnings.end());
            return c;
        });

        result.stage2 = timed("stage2", secs, report, [&] {
            auto s = run_stage2(result.candidates, result.documents, in.mining);
            report.stage2_k = s.k_effective;
            for (std::size_t size : s.clusters.sizes())
                if (size > 0) ++report.stage2_clusters_nonempty;
            report.selected_clusters = s.selected.size();
            for (const auto& [lang, n] : result.documents.counts()) report.culture_points[lang] = 0;
            for (const auto& cp : s.culture_points) ++report.culture_points[cp.lang];
            return s;
        });
        result.culture_points = result.stage2.culture_points;
    } catch (...) {
        if (partial) *partial = report;
        throw;
    }
    if (partial) *partial = report;
    return result;
}

}  // namespace cmine::mining
