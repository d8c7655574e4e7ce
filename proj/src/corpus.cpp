#include "cmine/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include "cmine/error.hpp"
#include "cmine/random.hpp"
#include "json.hpp"

namespace cmine::corpus {

using nlohmann::json;

DocumentSet::DocumentSet(std::vector<Document> docs, Provenance provenance)
    : docs_(std::move(docs)), provenance_(std::move(provenance)) {
    std::unordered_set<std::string> seen;
    seen.reserve(docs_.size());
    for (const auto& d : docs_) {
        if (!seen.insert(d.id).second) throw ArgumentError("duplicate document id: " + d.id);
        ++counts_[d.lang];
    }
}

std::size_t DocumentSet::count(const std::string& lang) const {
    auto it = counts_.find(lang);
    return it == counts_.end() ? 0 : it->second;
}

std::vector<std::string> DocumentSet::languages() const {
    std::vector<std::string> out;
    for (const auto& [lang, n] : counts_) out.push_back(lang);
    return out;
}

DocumentSet DocumentSet::merge(const std::vector<DocumentSet>& sets) {
    std::vector<Document> all;
    std::string sources;
    for (const auto& s : sets) {
        all.insert(all.end(), s.docs().begin(), s.docs().end());
        if (!s.provenance().source.empty()) {
            if (!sources.empty()) sources += ";";
            sources += s.provenance().source;
        }
    }
    return DocumentSet(std::move(all), {sources, sets.empty() ? 0 : sets.front().provenance().seed});
}

namespace {

bool parse_document(const std::string& line, Document& doc) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return false;
    auto id = j.find("id");
    auto title = j.find("title");
    if (id == j.end() || !id->is_string() || title == j.end() || !title->is_string()) return false;
    doc.id = id->get<std::string>();
    doc.title = title->get<std::string>();
    if (doc.id.empty() || doc.title.empty()) return false;

    if (auto p = j.find("paragraphs"); p != j.end()) {
        if (!p->is_array()) return false;
        for (const auto& para : *p) {
            if (!para.is_string()) return false;
            doc.paragraphs.push_back(para.get<std::string>());
        }
    }
    if (auto l = j.find("lang"); l != j.end()) {
        if (!l->is_string()) return false;
        doc.lang = l->get<std::string>();
    }
    if (auto t = j.find("tags"); t != j.end() && !t->is_null()) {
        if (!t->is_array()) return false;
        for (const auto& tag : *t) {
            if (!tag.is_string()) return false;
            doc.tags.insert(tag.get<std::string>());
        }
    }
    return true;
}

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

LoadResult load_impl(const std::filesystem::path& path, const std::string* lang) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open corpus: " + path.string());

    std::vector<Document> docs;
    std::unordered_set<std::string> seen;
    std::size_t lines = 0;
    std::size_t skipped = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (is_blank(line)) continue;
        ++lines;
        Document doc;
        if (!parse_document(line, doc)) {
            ++skipped;
            continue;
        }
        if (lang) doc.lang = *lang;
        if (doc.lang.empty() || !seen.insert(doc.id).second) {
            ++skipped;
            continue;
        }
        docs.push_back(std::move(doc));
    }
    if (in.bad()) throw IoError("read failed: " + path.string());
    if (lines > 0 && static_cast<double>(skipped) > k_max_malformed_fraction * lines) {
        throw CorpusFormatError(path.string() + ": " + std::to_string(skipped) + " of " +
                                std::to_string(lines) + " lines malformed");
    }
    return {DocumentSet(std::move(docs), {path.string(), 0}), skipped};
}

}  // namespace

LoadResult load_corpus(const std::filesystem::path& path, const std::string& lang) {
    return load_impl(path, &lang);
}

LoadResult load_corpus(const std::filesystem::path& path) { return load_impl(path, nullptr); }

void write_corpus(const DocumentSet& set, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write corpus: " + path.string());
    for (const auto& d : set.docs()) {
        nlohmann::ordered_json j;
        j["id"] = d.id;
        j["title"] = d.title;
        j["paragraphs"] = d.paragraphs;
        j["lang"] = d.lang;
        j["tags"] = std::vector<std::string>(d.tags.begin(), d.tags.end());
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

SampleResult stratified_sample(const DocumentSet& set,
                               const std::map<std::string, std::size_t>& quotas,
                               std::uint64_t seed) {
    std::map<std::string, std::vector<std::size_t>> by_lang;
    for (std::size_t i = 0; i < set.docs().size(); ++i) by_lang[set.docs()[i].lang].push_back(i);

    SampleResult result;
    std::vector<Document> out;
    for (const auto& [lang, quota] : quotas) {
        auto it = by_lang.find(lang);
        const std::size_t available = it == by_lang.end() ? 0 : it->second.size();
        if (quota > available) result.short_languages.push_back(lang);
        if (it == by_lang.end() || quota == 0) continue;

        std::vector<std::size_t> pool = it->second;
        const std::size_t take = std::min(quota, available);
        // Partial Fisher-Yates: the first `take` slots become a uniform sample.
        Rng rng(derive_seed(seed, "sample:" + lang));
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + rng.below(pool.size() - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(take);
        std::sort(pool.begin(), pool.end());
        for (std::size_t idx : pool) out.push_back(set.docs()[idx]);
    }
    result.set = DocumentSet(std::move(out), {set.provenance().source, seed});
    return result;
}

const std::set<std::string>& default_blocklist() {
    static const std::set<std::string> list{"DATE",     "TIME",    "CARDINAL", "ORDINAL",
                                            "QUANTITY", "PERCENT", "MONEY"};
    return list;
}

DocumentSet prune_by_category(const DocumentSet& set, const std::set<std::string>& blocklist) {
    std::vector<Document> kept;
    for (const auto& d : set.docs()) {
        const bool blocked = std::any_of(d.tags.begin(), d.tags.end(),
                                         [&](const std::string& t) { return blocklist.count(t) > 0; });
        if (!blocked) kept.push_back(d);
    }
    return DocumentSet(std::move(kept), set.provenance());
}

std::string make_sequence(const Document& doc) {
    if (doc.paragraphs.empty()) return doc.title;
    return doc.title + "\n" + doc.paragraphs.front();
}

std::vector<std::string> segment_units(const Document& doc) {
    std::vector<std::string> out;
    for (const auto& p : doc.paragraphs)
        if (!is_blank(p)) out.push_back(p);
    return out;
}

}  // namespace cmine::corpus
