#include <map>

#include "cmine/config.hpp"
#include "cmine/error.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cmine;
using namespace cmine::cli;
using cmine::testing::TempDir;
using cmine::testing::write_file;

namespace {

EnvLookup fake_env(std::map<std::string, std::string> vars) {
    return [vars = std::move(vars)](const std::string& name) -> std::optional<std::string> {
        auto it = vars.find(name);
        if (it == vars.end()) return std::nullopt;
        return it->second;
    };
}

const EnvLookup no_env = fake_env({});

}  // namespace

TEST_CASE("parse_key_values syntax") {
    const auto kv = parse_key_values(
        "# leading comment\n"
        "seed = 9   # trailing\n"
        "provider = \"hash # not a comment\"\n"
        "escaped = \"a\\\"b\\\\c\\n\"\n"
        "blocklist = [\"List of x\", \"Index \" ]\n"
        "\n"
        "[mining]\n"
        "theta = 0.7\n"
        "[ corpus ]\n"
        "ja = data/ja.jsonl\n");
    CHECK(kv.at("seed") == "9");
    CHECK(kv.at("provider") == "hash # not a comment");
    CHECK(kv.at("escaped") == "a\"b\\c\n");
    CHECK(kv.at("blocklist") == "List of x,Index ");
    CHECK(kv.at("mining.theta") == "0.7");
    CHECK(kv.at("corpus.ja") == "data/ja.jsonl");
    CHECK(kv.size() == 6);

    CHECK_THROWS_AS(parse_key_values("no equals sign\n"), ConfigError);
    CHECK_THROWS_AS(parse_key_values("[open\n"), ConfigError);
    CHECK_THROWS_AS(parse_key_values("= 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_key_values("x = \"bad \\q\"\n"), ConfigError);
    CHECK_THROWS_AS(parse_key_values("x = [1, 2\n"), ConfigError);
}

TEST_CASE("env_name") {
    CHECK(env_name("mining.theta") == "CMINE_MINING_THETA");
    CHECK(env_name("seed") == "CMINE_SEED");
    CHECK(env_name("corpus.ja") == "CMINE_CORPUS_JA");
}

TEST_CASE("parse_config defaults and fields") {
    const auto cfg = parse_config({}, "/base", no_env);
    CHECK(cfg.quotas == default_quotas());
    CHECK(cfg.quotas.at("en") == 3000000);
    CHECK(cfg.quotas.at("zh") == 1000000);
    CHECK(cfg.mining.theta == doctest::Approx(0.8));
    CHECK(cfg.mining.tau == 5);
    CHECK(cfg.mining.k_nn == 5);
    CHECK(cfg.mining.workers >= 1);
    CHECK(cfg.synth.n == 10);
    CHECK(cfg.out_dir == std::filesystem::path("/base/out"));

    const auto c2 = parse_config({{"vectors", "v/seq.cmv"},
                                  {"corpus.ja", "/abs/ja.jsonl"},
                                  {"quota.ja", "12"},
                                  {"mining.theta", "0.65"},
                                  {"mining.tau", "3"},
                                  {"workers", "2"},
                                  {"blocklist", "A ,B"},
                                  {"out", "o"}},
                                 "/base", no_env);
    CHECK(c2.vectors == std::filesystem::path("/base/v/seq.cmv"));
    CHECK(c2.corpora.at("ja") == std::filesystem::path("/abs/ja.jsonl"));
    CHECK(c2.quotas == std::map<std::string, std::size_t>{{"ja", 12}});
    CHECK(c2.mining.theta == doctest::Approx(0.65));
    CHECK(c2.mining.tau == 3);
    CHECK(c2.mining.workers == 2);
    CHECK(c2.blocklist == std::set<std::string>{"A", "B"});
    CHECK(c2.out_dir == std::filesystem::path("/base/o"));
}

TEST_CASE("parse_config errors") {
    CHECK_THROWS_AS(parse_config({{"mining.thetaa", "1"}}, ".", no_env), ConfigError);
    CHECK_THROWS_AS(parse_config({{"mining.tau", "-1"}}, ".", no_env), ConfigError);
    CHECK_THROWS_AS(parse_config({{"mining.theta", "0.8x"}}, ".", no_env), ConfigError);
    CHECK_THROWS_AS(parse_config({{"seed", ""}}, ".", no_env), ConfigError);
}

TEST_CASE("environment overrides file values") {
    const auto cfg = parse_config({{"mining.theta", "0.7"}, {"corpus.ja", "a.jsonl"}}, "/b",
                                  fake_env({{"CMINE_MINING_THETA", "0.9"},
                                            {"CMINE_SEED", "123"},
                                            {"CMINE_CORPUS_JA", "/env/ja.jsonl"},
                                            {"CMINE_UNRELATED", "x"}}));
    CHECK(cfg.mining.theta == doctest::Approx(0.9));
    CHECK(cfg.seed == 123);
    CHECK(cfg.corpora.at("ja") == std::filesystem::path("/env/ja.jsonl"));
    CHECK_THROWS_AS(parse_config({}, ".", fake_env({{"CMINE_MINING_TAU", "many"}})), ConfigError);
}

TEST_CASE("validate") {
    TempDir dir;
    write_file(dir / "v.cmv", "x");
    write_file(dir / "ja.jsonl", "");
    RunConfig cfg = parse_config({{"vectors", "v.cmv"}, {"corpus.ja", "ja.jsonl"}}, dir.path(), no_env);
    CHECK_NOTHROW(cfg.validate());

    SUBCASE("both vector sources") {
        cfg.provider = "hash";
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("neither vector source") {
        cfg.vectors.clear();
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("unit vectors without sequence vectors") {
        cfg.vectors.clear();
        cfg.provider = "hash";
        cfg.unit_vectors = dir / "v.cmv";
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("missing paths") {
        cfg.corpora["zh"] = dir / "zh.jsonl";
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("missing vector file") {
        cfg.vectors = dir / "nope.cmv";
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("synth client") {
        cfg.synth.client = "openai";
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg.synth.client = "replay";
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("metric") {
        cfg.analyze.metric = "manhattan";
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("mining thresholds") {
        cfg.mining.theta = 1.5;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("render_config round-trips the effective config") {
    TempDir dir;
    RunConfig cfg = parse_config({}, dir.path(), no_env);
    cfg.vectors = dir / "vec dir" / "seq.cmv";
    cfg.unit_vectors = dir / "units.cmv";
    cfg.corpora = {{"ja", dir / "ja.jsonl"}, {"zh", dir / "z\"h.jsonl"}};
    cfg.quotas = {{"ja", 5}, {"zh", 7}};
    cfg.blocklist = {"List of", "Index"};
    cfg.mining.theta = 0.1 + 0.2;
    cfg.mining.tol = 1e-7;
    cfg.mining.k_stage2 = 33;
    cfg.synth.client = "replay";
    cfg.synth.responses = dir / "r.jsonl";
    cfg.analyze.pairs_cp = dir / "p.jsonl";
    cfg.analyze.metric = "euclidean";
    cfg.seed = 99;
    cfg.log_level = "debug";

    write_file(dir / "run.toml", render_config(cfg));
    const RunConfig back = load_config(dir / "run.toml", no_env);
    CHECK(back.to_json() == cfg.to_json());
    CHECK(back.mining.theta == cfg.mining.theta);

    SUBCASE("empty blocklist stays empty") {
        cfg.blocklist.clear();
        write_file(dir / "run2.toml", render_config(cfg));
        CHECK(load_config(dir / "run2.toml", no_env).blocklist.empty());
    }
}

TEST_CASE("load_config missing file") {
    CHECK_THROWS_AS(load_config("/nonexistent/run.toml", no_env), IoError);
}
