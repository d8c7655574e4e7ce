#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace cmine::corpus {

// One corpus entry: an article title, its body split into paragraphs, and
// pre-computed entity category tags.
struct Document {
    std::string id;
    std::string title;
    std::vector<std::string> paragraphs;
    std::string lang;
    std::set<std::string> tags;

    bool operator==(const Document&) const = default;
};

struct Provenance {
    std::string source;
    std::uint64_t seed = 0;
};

// Immutable collection of documents with per-language counts.
class DocumentSet {
public:
    DocumentSet() = default;
    explicit DocumentSet(std::vector<Document> docs, Provenance provenance = {});

    const std::vector<Document>& docs() const noexcept { return docs_; }
    const Provenance& provenance() const noexcept { return provenance_; }
    std::size_t size() const noexcept { return docs_.size(); }
    bool empty() const noexcept { return docs_.empty(); }

    // O(1) amortised after construction.
    std::size_t count(const std::string& lang) const;
    const std::map<std::string, std::size_t>& counts() const noexcept { return counts_; }
    std::vector<std::string> languages() const;

    // Concatenates sets; ids must stay unique.
    static DocumentSet merge(const std::vector<DocumentSet>& sets);

private:
    std::vector<Document> docs_;
    Provenance provenance_;
    std::map<std::string, std::size_t> counts_;
};

struct LoadResult {
    DocumentSet set;
    std::size_t skipped = 0;
};

// Fraction of malformed lines above which loading fails.
inline constexpr double k_max_malformed_fraction = 0.10;

// Reads corpus JSONL. Every record gets `lang` overriding whatever the file says.
LoadResult load_corpus(const std::filesystem::path& path, const std::string& lang);

// Reads corpus JSONL keeping each record's own `lang` field.
LoadResult load_corpus(const std::filesystem::path& path);

void write_corpus(const DocumentSet& set, const std::filesystem::path& path);

struct SampleResult {
    DocumentSet set;
    // Languages whose quota exceeded what was available.
    std::vector<std::string> short_languages;
    bool warning() const noexcept { return !short_languages.empty(); }
};

// Uniform sampling without replacement per language; deterministic given seed.
// Languages absent from `quotas` are dropped.
SampleResult stratified_sample(const DocumentSet& set,
                               const std::map<std::string, std::size_t>& quotas,
                               std::uint64_t seed);

const std::set<std::string>& default_blocklist();

// Drops every document whose tags intersect the blocklist.
DocumentSet prune_by_category(const DocumentSet& set, const std::set<std::string>& blocklist);

// Title followed by the leading paragraph, separated by a single newline.
std::string make_sequence(const Document& doc);

// Paragraphs with empty and whitespace-only entries removed.
std::vector<std::string> segment_units(const Document& doc);

}  // namespace cmine::corpus
