#include <algorithm>

#include "cmine/corpus.hpp"
#include "cmine/error.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cmine;
using namespace cmine::corpus;
using cmine::testing::TempDir;
using cmine::testing::write_file;

namespace {

std::string line(const std::string& id, const std::string& tags = "") {
    return R"({"id":")" + id + R"(","title":"T )" + id + R"(","paragraphs":["p1","p2"],"lang":"en","tags":[)" +
           tags + "]}\n";
}

DocumentSet make_set(const std::map<std::string, std::size_t>& per_lang) {
    std::vector<Document> docs;
    for (const auto& [lang, n] : per_lang)
        for (std::size_t i = 0; i < n; ++i)
            docs.push_back({lang + "-" + std::to_string(i), "title " + std::to_string(i), {"p"}, lang, {}});
    return DocumentSet(std::move(docs));
}

}  // namespace

TEST_CASE("load_corpus parses records and forces the language") {
    TempDir dir;
    write_file(dir / "a.jsonl", line("1") + line("2") + "\n" + line("3"));
    auto r = load_corpus(dir / "a.jsonl", "zh");
    CHECK(r.set.size() == 3);
    CHECK(r.skipped == 0);
    for (const auto& d : r.set.docs()) CHECK(d.lang == "zh");
    CHECK(r.set.docs()[0].paragraphs == std::vector<std::string>{"p1", "p2"});
    CHECK(r.set.count("zh") == 3);
    CHECK(r.set.count("en") == 0);
}

TEST_CASE("load_corpus skips malformed lines and counts them") {
    TempDir dir;
    std::string text;
    for (int i = 0; i < 19; ++i) text += line(std::to_string(i));
    text += "{not json\n";
    write_file(dir / "a.jsonl", text);
    auto r = load_corpus(dir / "a.jsonl", "en");
    CHECK(r.set.size() == 19);
    CHECK(r.skipped == 1);

    write_file(dir / "b.jsonl", line("1") + line("2") + R"({"id":"x","paragraphs":[]})" + "\n");
    CHECK_THROWS_AS(load_corpus(dir / "b.jsonl", "en"), CorpusFormatError);

    write_file(dir / "c.jsonl", line("1") + line("1") + line("2") + line("3") + line("4") + line("5") +
                                    line("6") + line("7") + line("8") + line("9") + line("10"));
    auto dup = load_corpus(dir / "c.jsonl", "en");
    CHECK(dup.set.size() == 10);
    CHECK(dup.skipped == 1);
}

TEST_CASE("load_corpus edge cases") {
    TempDir dir;
    write_file(dir / "empty.jsonl", "");
    auto r = load_corpus(dir / "empty.jsonl", "en");
    CHECK(r.set.empty());
    CHECK(r.skipped == 0);
    CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl", "en"), IoError);

    write_file(dir / "notags.jsonl", R"({"id":"a","title":"A","paragraphs":[],"lang":"en"})" "\n");
    auto n = load_corpus(dir / "notags.jsonl");
    REQUIRE(n.set.size() == 1);
    CHECK(n.set.docs()[0].tags.empty());
    CHECK(n.set.docs()[0].lang == "en");
}

TEST_CASE("write_corpus round-trips") {
    TempDir dir;
    std::vector<Document> docs{{"a", "A", {"x", "y"}, "fr", {"PERSON"}}, {"b", "B", {}, "fr", {}}};
    DocumentSet set(docs);
    write_corpus(set, dir / "out.jsonl");
    auto back = load_corpus(dir / "out.jsonl");
    CHECK(back.set.docs() == set.docs());
}

TEST_CASE("document set rejects duplicate ids and merges") {
    CHECK_THROWS(DocumentSet({{"a", "A", {}, "en", {}}, {"a", "B", {}, "en", {}}}));
    auto m = DocumentSet::merge({make_set({{"en", 2}}), make_set({{"zh", 3}})});
    CHECK(m.size() == 5);
    CHECK(m.languages() == std::vector<std::string>{"en", "zh"});
}

TEST_CASE("stratified_sample quotas") {
    const auto set = make_set({{"en", 50}, {"zh", 4}, {"fr", 7}});
    auto s = stratified_sample(set, {{"en", 10}, {"zh", 10}}, 3);
    CHECK(s.set.count("en") == 10);
    CHECK(s.set.count("zh") == 4);
    CHECK(s.set.count("fr") == 0);
    CHECK(s.warning());
    CHECK(s.short_languages == std::vector<std::string>{"zh"});

    auto zero = stratified_sample(set, {{"zh", 0}}, 3);
    CHECK(zero.set.empty());
    CHECK_FALSE(zero.warning());
}

TEST_CASE("stratified_sample is deterministic, order-preserving and seed-dependent") {
    const auto set = make_set({{"en", 200}, {"de", 100}});
    const std::map<std::string, std::size_t> q{{"en", 30}, {"de", 20}};
    auto a = stratified_sample(set, q, 11);
    auto b = stratified_sample(set, q, 11);
    auto c = stratified_sample(set, q, 12);
    CHECK(a.set.docs() == b.set.docs());
    CHECK(a.set.docs() != c.set.docs());
    // Output follows input order.
    std::vector<std::size_t> pos;
    for (const auto& d : a.set.docs()) {
        auto it = std::find_if(set.docs().begin(), set.docs().end(), [&](const Document& x) { return x.id == d.id; });
        pos.push_back(static_cast<std::size_t>(it - set.docs().begin()));
    }
    CHECK(std::is_sorted(pos.begin(), pos.end()));
}

TEST_CASE("stratified_sample is roughly uniform") {
    const auto set = make_set({{"en", 10}});
    std::vector<int> hits(10, 0);
    for (std::uint64_t seed = 0; seed < 4000; ++seed) {
        const auto s = stratified_sample(set, {{"en", 3}}, seed);
        for (const auto& d : s.set.docs()) ++hits[std::stoul(d.id.substr(3))];
    }
    for (int h : hits) CHECK(std::abs(h - 1200) < 150);
}

TEST_CASE("prune_by_category") {
    DocumentSet set({{"a", "A", {}, "en", {"DATE"}},
                     {"b", "B", {}, "en", {}},
                     {"c", "C", {}, "en", {"PERSON"}},
                     {"d", "D", {}, "en", {"PERSON", "CARDINAL"}}});
    auto p = prune_by_category(set, default_blocklist());
    REQUIRE(p.size() == 2);
    CHECK(p.docs()[0].id == "b");
    CHECK(p.docs()[1].id == "c");
    CHECK(default_blocklist() ==
          std::set<std::string>{"DATE", "TIME", "CARDINAL", "ORDINAL", "QUANTITY", "PERCENT", "MONEY"});

    DocumentSet all({{"a", "A", {}, "en", {"CARDINAL"}}, {"b", "B", {}, "en", {"CARDINAL"}}});
    CHECK(prune_by_category(all, default_blocklist()).empty());
}

TEST_CASE("prune is monotone in the blocklist") {
    std::vector<Document> docs;
    const std::vector<std::string> cats{"A", "B", "C", "D", "E"};
    cmine::Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        Document d{"d" + std::to_string(i), "t", {}, "en", {}};
        for (const auto& c : cats)
            if (rng.uniform() < 0.3) d.tags.insert(c);
        docs.push_back(d);
    }
    DocumentSet set(docs);
    std::set<std::string> block;
    std::size_t prev = set.size();
    for (const auto& c : cats) {
        block.insert(c);
        const std::size_t kept = prune_by_category(set, block).size();
        CHECK(kept <= prev);
        prev = kept;
    }
}

TEST_CASE("make_sequence and segment_units") {
    CHECK(make_sequence({"1", "Jianghu", {"a socio-moral order"}, "zh", {}}) == "Jianghu\na socio-moral order");
    CHECK(make_sequence({"2", "Apple", {}, "en", {}}) == "Apple");
    CHECK(make_sequence({"3", "X", {"p1", "p2"}, "en", {}}) == "X\np1");

    CHECK(segment_units({"1", "T", {"a", "", "b"}, "en", {}}) == std::vector<std::string>{"a", "b"});
    CHECK(segment_units({"1", "T", {}, "en", {}}).empty());
    CHECK(segment_units({"1", "T", {"only one"}, "en", {}}) == std::vector<std::string>{"only one"});
    CHECK(segment_units({"1", "T", {" \t", "x", "\n"}, "en", {}}) == std::vector<std::string>{"x"});
}
