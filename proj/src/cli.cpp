#include "cmine/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <optional>
#include <set>

#include "cmine/analysis.hpp"
#include "cmine/config.hpp"
#include "cmine/corpus.hpp"
#include "cmine/embed.hpp"
#include "cmine/error.hpp"
#include "cmine/mining.hpp"
#include "cmine/pipeline.hpp"
#include "cmine/random.hpp"
#include "cmine/synth.hpp"
#include "cmine/synthetic.hpp"
#include "cmine/vecstore.hpp"

namespace cmine::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> workers;
    std::string log_level;
};

// Fixed file names inside the output directory.
struct Layout {
    fs::path root;
    fs::path sampled() const { return root / "sampled.jsonl"; }
    fs::path pruned() const { return root / "pruned.jsonl"; }
    fs::path sequences() const { return root / "vectors" / "sequences.cmv"; }
    fs::path units() const { return root / "vectors" / "units.cmv"; }
    fs::path candidates() const { return root / "candidates.json"; }
    fs::path cps() const { return root / "cps.jsonl"; }
    fs::path report() const { return root / "report.json"; }
    fs::path timing() const { return root / "timing.json"; }
    fs::path stage_report(const std::string& stage) const { return root / "reports" / (stage + ".json"); }
};

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out << text;
        if (!out) throw IoError("write failed: " + path.string());
    }
    fs::rename(tmp, path);
}

void write_json(const fs::path& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

ordered_json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void configure_logging(const std::string& level) {
    static std::once_flag once;
    std::call_once(once, [] {
        auto logger = spdlog::stderr_logger_mt("cmine");
        logger->set_pattern("[%H:%M:%S.%e] [%l] %v");
        spdlog::set_default_logger(logger);
    });
    const auto lvl = spdlog::level::from_str(level);
    if (lvl == spdlog::level::off && level != "off") throw ArgumentError("unknown log level: " + level);
    spdlog::set_level(lvl);
}

RunConfig effective_config(const CommonFlags& flags) {
    RunConfig cfg;
    if (!flags.config.empty()) {
        cfg = load_config(flags.config);
    } else {
        cfg = parse_config({}, fs::current_path(), process_env());
    }
    if (flags.seed) cfg.seed = *flags.seed;
    if (!flags.out.empty()) cfg.out_dir = flags.out;
    if (flags.workers) cfg.mining.workers = std::max<std::size_t>(1, *flags.workers);
    if (!flags.log_level.empty()) cfg.log_level = flags.log_level;
    configure_logging(cfg.log_level);
    return cfg;
}

// Vectors from the config when given, otherwise the ones the embed stage persisted.
mining::EmbeddedCorpus load_vectors(const RunConfig& cfg, const Layout& lay) {
    mining::EmbeddedCorpus e;
    if (!cfg.vectors.empty()) {
        e.sequences = vecstore::read_vectors(cfg.vectors);
        if (!cfg.unit_vectors.empty()) e.units = vecstore::read_vectors(cfg.unit_vectors);
    } else {
        e.sequences = vecstore::read_vectors(lay.sequences());
        if (fs::exists(lay.units())) e.units = vecstore::read_vectors(lay.units());
    }
    return e;
}

corpus::DocumentSet read_intermediate(const fs::path& path) {
    auto r = corpus::load_corpus(path);
    if (r.skipped > 0) throw CorpusFormatError("intermediate file has malformed lines: " + path.string());
    return std::move(r.set);
}

mining::PipelineInputs pipeline_inputs(const RunConfig& cfg, embed::EmbedProvider* provider) {
    mining::PipelineInputs in;
    in.corpora = cfg.corpora;
    in.quotas = cfg.quotas;
    in.blocklist = cfg.blocklist;
    in.sample_seed = cfg.seed;
    in.provider = provider;
    in.embedder.expected_dim = cfg.embed_dim;
    in.embedder.batch_size = cfg.embed_batch;
    in.embedder.max_in_flight = cfg.embed_in_flight;
    in.sequence_vectors = cfg.vectors;
    in.unit_vectors = cfg.unit_vectors;
    in.mining = cfg.mining;
    return in;
}

ordered_json timing_json(const std::map<std::string, double>& seconds) {
    ordered_json j = ordered_json::object();
    double total = 0.0;
    for (const auto& [stage, s] : seconds) {
        j[stage] = s;
        total += s;
    }
    j["total"] = total;
    return j;
}

// Runs the whole pipeline, persisting intermediates and the report even on failure.
mining::PipelineResult mine_all(const RunConfig& cfg, const Layout& lay) {
    std::unique_ptr<embed::EmbedProvider> provider;
    if (!cfg.provider.empty()) provider = embed::make_provider(cfg.provider);
    mining::RunReport partial;
    try {
        auto result = mining::run_pipeline(pipeline_inputs(cfg, provider.get()), &partial);
        result.report.config = cfg.to_json();
        corpus::write_corpus(result.documents, lay.pruned());
        if (provider) {
            vecstore::write_vectors(result.vectors.sequences, lay.sequences());
            vecstore::write_vectors(result.vectors.units, lay.units());
        }
        mining::write_candidates(result.candidates, lay.candidates());
        return result;
    } catch (const StageError&) {
        partial.config = cfg.to_json();
        write_json(lay.report(), partial.to_json());
        throw;
    }
}

std::string theta_label(double theta) { return fmt::format("{:.2f}", theta); }

std::string utc_timestamp() {
    std::time_t t = std::time(nullptr);
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int cmd_sample(const RunConfig& cfg, const Layout& lay) {
    if (cfg.corpora.empty()) throw ConfigError("no corpus paths configured");
    mining::RunReport report;
    report.config = cfg.to_json();
    std::vector<corpus::DocumentSet> sets;
    for (const auto& [lang, path] : cfg.corpora) {
        auto r = corpus::load_corpus(path, lang);
        report.loaded[lang] = r.set.size();
        report.malformed[lang] = r.skipped;
        sets.push_back(std::move(r.set));
    }
    auto s = corpus::stratified_sample(corpus::DocumentSet::merge(sets), cfg.quotas, cfg.seed);
    for (const auto& lang : s.short_languages) {
        report.warnings.push_back("quota for " + lang + " exceeds available documents");
        spdlog::warn("quota for {} exceeds available documents", lang);
    }
    report.sampled = s.set.counts();
    corpus::write_corpus(s.set, lay.sampled());
    write_json(lay.stage_report("sample"), report.to_json());
    return 0;
}

int cmd_prune(const RunConfig& cfg, const Layout& lay) {
    mining::RunReport report;
    report.config = cfg.to_json();
    const auto sampled = read_intermediate(lay.sampled());
    report.sampled = sampled.counts();
    const auto pruned = corpus::prune_by_category(sampled, cfg.blocklist);
    report.pruned = pruned.counts();
    corpus::write_corpus(pruned, lay.pruned());
    write_json(lay.stage_report("prune"), report.to_json());
    return 0;
}

int cmd_embed(const RunConfig& cfg, const Layout& lay) {
    if (cfg.provider.empty()) throw ConfigError("embed needs a provider; vector files are already embedded");
    auto provider = embed::make_provider(cfg.provider);
    embed::Embedder embedder(*provider, {cfg.embed_dim, cfg.embed_batch, cfg.embed_in_flight});
    const auto docs = read_intermediate(lay.pruned());
    const auto e = mining::embed_corpus(docs, embedder);
    vecstore::write_vectors(e.sequences, lay.sequences());
    vecstore::write_vectors(e.units, lay.units());
    mining::RunReport report;
    report.config = cfg.to_json();
    report.pruned = docs.counts();
    report.embedded_sequences = e.sequences.rows();
    report.embedded_units = e.units.rows();
    write_json(lay.stage_report("embed"), report.to_json());
    spdlog::info("embedded {} sequences, {} units ({} cache hits)", e.sequences.rows(), e.units.rows(),
                 embedder.stats().cache_hits);
    return 0;
}

int cmd_stage1(const RunConfig& cfg, const Layout& lay) {
    const auto docs = read_intermediate(lay.pruned());
    const auto vectors = load_vectors(cfg, lay);
    const auto candidates =
        mining::run_stage1(docs, vectors.sequences, mining::group_units(vectors.units), cfg.mining);
    mining::write_candidates(candidates, lay.candidates());
    mining::RunReport report;
    report.config = cfg.to_json();
    report.pruned = docs.counts();
    report.stage1_clusters = candidates.clusters_per_language;
    report.candidates = candidates.per_language;
    report.warnings = candidates.warnings;
    write_json(lay.stage_report("stage1"), report.to_json());
    return 0;
}

mining::RunReport stage2_report(const RunConfig& cfg, const corpus::DocumentSet& docs,
                                const mining::CandidateSet& candidates, const mining::Stage2Result& s) {
    mining::RunReport report;
    report.config = cfg.to_json();
    report.pruned = docs.counts();
    report.stage1_clusters = candidates.clusters_per_language;
    report.candidates = candidates.per_language;
    report.warnings = candidates.warnings;
    report.stage2_k = s.k_effective;
    for (std::size_t size : s.clusters.sizes())
        if (size > 0) ++report.stage2_clusters_nonempty;
    report.selected_clusters = s.selected.size();
    for (const auto& [lang, n] : docs.counts()) report.culture_points[lang] = 0;
    for (const auto& cp : s.culture_points) ++report.culture_points[cp.lang];
    return report;
}

int cmd_stage2(const RunConfig& cfg, const Layout& lay) {
    const auto docs = read_intermediate(lay.pruned());
    const auto vectors = load_vectors(cfg, lay);
    const auto candidates = mining::read_candidates(lay.candidates(), vectors.sequences);
    const auto s = mining::run_stage2(candidates, docs, cfg.mining);
    mining::write_culture_points(s.culture_points, lay.cps());
    write_json(lay.stage_report("stage2"), stage2_report(cfg, docs, candidates, s).to_json());
    return 0;
}

int cmd_mine(const RunConfig& cfg, const Layout& lay) {
    const auto result = mine_all(cfg, lay);
    mining::write_culture_points(result.culture_points, lay.cps());
    write_json(lay.report(), result.report.to_json());
    write_json(lay.timing(), timing_json(result.stage_seconds));
    std::size_t total = 0;
    for (const auto& [lang, n] : result.report.culture_points) total += n;
    spdlog::info("{} culture points in {} clusters", total, result.report.selected_clusters);
    return 0;
}

int cmd_sweep(const RunConfig& cfg, const Layout& lay, const std::vector<double>& thetas) {
    if (thetas.empty()) throw ArgumentError("--thetas needs at least one value");
    const auto result = mine_all(cfg, lay);
    std::string csv = "theta,selected_clusters,culture_points\n";
    for (double theta : thetas) {
        RunConfig at = cfg;
        at.mining.theta = theta;
        at.mining.validate();
        const auto s = mining::reselect(result.stage2, result.candidates, result.documents, at.mining);
        auto report = result.report;
        report.config = at.to_json();
        report.selected_clusters = s.selected.size();
        for (auto& [lang, n] : report.culture_points) n = 0;
        for (const auto& cp : s.culture_points) ++report.culture_points[cp.lang];
        const std::string label = theta_label(theta);
        mining::write_culture_points(s.culture_points, lay.root / "sweep" / ("cps_theta_" + label + ".jsonl"));
        write_json(lay.root / "sweep" / ("report_theta_" + label + ".json"), report.to_json());
        csv += fmt::format("{},{},{}\n", label, s.selected.size(), s.culture_points.size());
    }
    write_text(lay.root / "sweep" / "sweep.csv", csv);
    write_json(lay.timing(), timing_json(result.stage_seconds));
    return 0;
}

int cmd_analyze(const RunConfig& cfg, const Layout& lay) {
    const auto vectors = load_vectors(cfg, lay);
    const auto candidates = mining::read_candidates(lay.candidates(), vectors.sequences);
    const auto cps = mining::read_culture_points(lay.cps());
    std::set<std::string> cp_ids;
    for (const auto& cp : cps) cp_ids.insert(cp.id);
    std::vector<std::size_t> cp_rows, other_rows;
    for (std::size_t r = 0; r < candidates.vectors.rows(); ++r)
        (cp_ids.count(candidates.vectors.id(r)) ? cp_rows : other_rows).push_back(r);

    ordered_json summary;
    summary["config"] = cfg.to_json();

    const auto cp_sample = analysis::stratified_rows(candidates.vectors, cp_rows, cfg.analyze.per_language,
                                                     derive_seed(cfg.analyze.seed, "cp"));
    const auto other_sample = analysis::stratified_rows(candidates.vectors, other_rows,
                                                        cfg.analyze.per_language,
                                                        derive_seed(cfg.analyze.seed, "non_cp"));
    analysis::write_projection_csv(candidates.vectors, cp_sample, other_sample, lay.root / "projection.csv");
    ordered_json mixing;
    try {
        const auto m = analysis::mixing_report(candidates.vectors, cp_rows, other_rows,
                                               cfg.analyze.per_language, cfg.analyze.k_nn, cfg.analyze.seed);
        mixing["group_mean"] = m.group_mean;
        mixing["sample_sizes"] = m.sample_sizes;
    } catch (const ArgumentError& e) {
        spdlog::warn("mixing score skipped: {}", e.what());
        mixing["skipped"] = e.what();
    }
    summary["mixing"] = mixing;

    std::map<std::string, std::size_t> sampled;
    if (fs::exists(lay.report())) {
        const auto report = read_json(lay.report());
        sampled = report.at("stages").at("sampled").get<std::map<std::string, std::size_t>>();
    } else {
        sampled = candidates.input_per_language;
        spdlog::warn("no run report; yield uses stage-1 input counts");
    }
    const auto dist = analysis::cp_distribution(cps, sampled);
    analysis::write_distribution_csv(dist, lay.root / "distribution.csv");

    if (!cfg.analyze.pairs_cp.empty() && !cfg.analyze.pairs_baseline.empty()) {
        const auto cp_pairs = analysis::read_translation_pairs(cfg.analyze.pairs_cp);
        const auto base_pairs = analysis::read_translation_pairs(cfg.analyze.pairs_baseline);
        const auto cmp = analysis::compare_resistance(cp_pairs, base_pairs,
                                                      vecstore::parse_metric(cfg.analyze.metric));
        analysis::write_radar_csv(cmp, lay.root / "radar.csv");
        summary["resistance_delta"] = cmp.delta;
    }
    write_json(lay.root / "analysis.json", summary);
    return 0;
}

int cmd_synth(const RunConfig& cfg, const Layout& lay, const std::string& cps_override) {
    const fs::path cps_path = cps_override.empty() ? lay.cps() : fs::path(cps_override);
    const auto cps = mining::read_culture_points(cps_path);
    const auto tasks = synth::build_tasks(cps, cfg.synth.n, cfg.synth.per_type);

    std::unique_ptr<synth::LlmClient> client;
    if (cfg.synth.client == "replay") {
        client = std::make_unique<synth::ReplayClient>(synth::ReplayClient::from_file(cfg.synth.responses));
    } else {
        client = std::make_unique<synth::MockClient>();
    }
    synth::DispatchOptions opts;
    opts.max_in_flight = cfg.synth.max_in_flight;
    opts.timeout = std::chrono::milliseconds(cfg.synth.timeout_ms);
    const auto outcomes = synth::dispatch(tasks, *client, opts, utc_timestamp);

    std::string prompts;
    std::vector<synth::InstructionRecord> records;
    std::map<std::string, std::size_t> issue_counts;
    std::size_t failed = 0;
    for (const auto& o : outcomes) {
        prompts += ordered_json{{"cluster_id", o.task.cluster_id},
                                {"task_type", synth::to_string(o.task.task_type)},
                                {"prompt", o.task.prompt}}
                       .dump() +
                   "\n";
        if (o.record) records.push_back(*o.record);
        if (!o.error.empty()) ++failed;
        for (const auto& issue : o.issues) ++issue_counts[std::string(synth::to_string(issue.code))];
    }
    write_text(lay.root / "prompts.jsonl", prompts);
    synth::emit_dataset(records, lay.root / "dataset.jsonl");
    ordered_json report;
    report["config"] = cfg.to_json();
    report["tasks"] = tasks.size();
    report["accepted"] = records.size();
    report["rejected"] = tasks.size() - records.size() - failed;
    report["failed"] = failed;
    report["issues"] = issue_counts;
    write_json(lay.root / "synth_report.json", report);
    return 0;
}

struct FixtureFlags {
    synthetic::SyntheticSpec spec;
    std::size_t pairs_per_group = 300;
    double displacement = 3.0;
};

int cmd_gen_fixture(const CommonFlags& flags, const FixtureFlags& ff) {
    configure_logging(flags.log_level.empty() ? "info" : flags.log_level);
    const fs::path root = flags.out.empty() ? fs::path("fixture") : fs::path(flags.out);
    const std::uint64_t seed = flags.seed.value_or(1);
    const auto fx = synthetic::gen_synthetic(ff.spec, seed);
    const auto fc = synthetic::make_fixture_corpus(fx, ff.spec, derive_seed(seed, "corpus"));

    RunConfig cfg = parse_config({}, root, [](const std::string&) { return std::nullopt; });
    cfg.quotas.clear();
    for (const auto& lang : fc.documents.languages()) {
        std::vector<corpus::Document> docs;
        for (const auto& d : fc.documents.docs())
            if (d.lang == lang) docs.push_back(d);
        const fs::path p = root / "corpus" / (lang + ".jsonl");
        corpus::write_corpus(corpus::DocumentSet(std::move(docs)), p);
        cfg.corpora[lang] = fs::path("corpus") / (lang + ".jsonl");
        cfg.quotas[lang] = fc.documents.count(lang);
    }
    vecstore::write_vectors(fc.sequence_vectors, root / "vectors" / "sequences.cmv");
    vecstore::write_vectors(fc.unit_vectors, root / "vectors" / "units.cmv");
    cfg.vectors = "vectors/sequences.cmv";
    cfg.unit_vectors = "vectors/units.cmv";

    std::string labels;
    for (std::size_t i = 0; i < fx.labels.size(); ++i) {
        const auto& l = fx.labels[i];
        labels += ordered_json{{"id", fx.vectors.id(i)},
                               {"lang", l.lang},
                               {"kind", synthetic::to_string(l.kind)},
                               {"concept_id", l.concept_id},
                               {"concept_lang", l.concept_lang},
                               {"contaminant", l.contaminant},
                               {"fragmented", l.fragmented}}
                      .dump() +
                  "\n";
    }
    write_text(root / "labels.jsonl", labels);

    const auto rows = synthetic::make_translation_pairs(fx, ff.spec, ff.pairs_per_group, ff.displacement,
                                                        derive_seed(seed, "pairs"));
    std::vector<analysis::TranslationPair> island_pairs, universal_pairs;
    for (const auto& r : rows)
        (r.island ? island_pairs : universal_pairs).push_back({r.id, r.lang, r.original, r.translated});
    analysis::write_translation_pairs(island_pairs, root / "pairs_cp.jsonl");
    analysis::write_translation_pairs(universal_pairs, root / "pairs_baseline.jsonl");
    cfg.analyze.pairs_cp = "pairs_cp.jsonl";
    cfg.analyze.pairs_baseline = "pairs_baseline.jsonl";

    cfg.out_dir = "out";
    cfg.seed = seed;
    write_text(root / "run.toml", render_config(cfg));
    spdlog::info("fixture with {} documents written to {}", fc.documents.size(), root.string());
    return 0;
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message,
                  const std::string& stage = {}) {
    ordered_json j{{"error", kind}, {"message", message}};
    if (!stage.empty()) j["stage"] = stage;
    err << j.dump() << "\n";
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Culture point mining pipeline", "cmine"};
    app.require_subcommand(1);
    app.fallthrough();

    CommonFlags flags;
    app.add_option("--config", flags.config, "Run configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", flags.seed, "Sampling seed override");
    app.add_option("--out", flags.out, "Output directory override");
    app.add_option("--workers", flags.workers, "Worker threads (default: available cores)");
    app.add_option("--log-level", flags.log_level, "trace|debug|info|warn|error|off");

    auto* sample = app.add_subcommand("sample", "Load corpora and draw the stratified sample");
    auto* prune = app.add_subcommand("prune", "Drop sampled documents with blocked entity tags");
    auto* embed = app.add_subcommand("embed", "Embed pruned sequences and paragraph units");
    auto* stage1 = app.add_subcommand("stage1", "Per-language density and coherence filtering");
    auto* stage2 = app.add_subcommand("stage2", "Global clustering and culture point extraction");
    auto* mine = app.add_subcommand("mine", "Run every stage end to end");
    auto* analyze = app.add_subcommand("analyze", "Projection, mixing, distribution and radar outputs");
    auto* synth_cmd = app.add_subcommand("synth", "Build synthesis prompts and validate responses");
    auto* sweep = app.add_subcommand("sweep-theta", "Mine once and re-select at several thresholds");
    auto* gen = app.add_subcommand("gen-fixture", "Write a planted-island fixture and its run config");

    std::vector<double> thetas{0.4, 0.6, 0.8, 1.0};
    sweep->add_option("--thetas", thetas, "Comma-separated thresholds")->delimiter(',');

    std::string cps_override;
    synth_cmd->add_option("--cps", cps_override, "Culture point JSONL (default: <out>/cps.jsonl)");

    FixtureFlags ff;
    gen->add_option("--entries", ff.spec.entries_per_language, "Entries per language");
    gen->add_option("--universal", ff.spec.universal_concepts, "Universal concepts");
    gen->add_option("--islands", ff.spec.islands_per_language, "Islands per language");
    gen->add_option("--dim", ff.spec.dim, "Embedding dimension");
    gen->add_option("--sigma", ff.spec.sigma_in, "Within-concept spread");
    gen->add_option("--separation", ff.spec.separation, "Minimum center separation");
    gen->add_option("--contaminants", ff.spec.contaminants_per_island, "Foreign entries per island");
    gen->add_option("--pairs", ff.pairs_per_group, "Translation pairs per language and group");
    gen->add_option("--displacement", ff.displacement, "Island translation offset");

    std::vector<std::string> argv_store{"cmine"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << app.help();
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_fixture(flags, ff);
        const RunConfig cfg = effective_config(flags);
        cfg.validate();
        const Layout lay{cfg.out_dir};
        fs::create_directories(lay.root);
        if (sample->parsed()) return cmd_sample(cfg, lay);
        if (prune->parsed()) return cmd_prune(cfg, lay);
        if (embed->parsed()) return cmd_embed(cfg, lay);
        if (stage1->parsed()) return cmd_stage1(cfg, lay);
        if (stage2->parsed()) return cmd_stage2(cfg, lay);
        if (mine->parsed()) return cmd_mine(cfg, lay);
        if (analyze->parsed()) return cmd_analyze(cfg, lay);
        if (synth_cmd->parsed()) return cmd_synth(cfg, lay, cps_override);
        if (sweep->parsed()) return cmd_sweep(cfg, lay, thetas);
    } catch (const StageError& e) {
        report_error(err, "stage_failure", e.what(), e.stage());
        return 1;
    } catch (const Error& e) {
        report_error(err, e.kind(), e.what());
        return 1;
    } catch (const std::exception& e) {
        report_error(err, "internal_error", e.what());
        return 1;
    }
    return 2;
}

}  // namespace cmine::cli
