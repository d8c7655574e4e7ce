#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cmine/corpus.hpp"
#include "cmine/vecstore.hpp"

namespace cmine::synthetic {

// Planted-island embedding fixture. Universal concepts share one center across all
// languages; island concepts have a language-exclusive center.
struct SyntheticSpec {
    std::vector<std::string> languages{"de", "en", "es", "fr", "ja", "zh"};
    std::size_t entries_per_language = 5000;
    std::size_t universal_concepts = 50;
    std::size_t islands_per_language = 10;
    std::size_t dim = 64;
    double sigma_in = 0.05;
    double separation = 3.0;
    // Entries of another language planted around each island center.
    std::size_t contaminants_per_island = 0;

    // Paragraph units per document, drawn uniformly in [min, max].
    std::size_t min_units = 2;
    std::size_t max_units = 5;
    // Fraction of documents whose units point in unrelated directions.
    double fragmented_fraction = 0.3;
    double unit_sigma = 0.05;
};

enum class ConceptKind { universal, island };

std::string to_string(ConceptKind kind);

struct RowLabel {
    ConceptKind kind = ConceptKind::universal;
    // Universal concepts are numbered [0, U); islands continue from U.
    std::size_t concept_id = 0;
    std::string lang;
    // Language owning the island (differs from `lang` for a contaminant).
    std::string concept_lang;
    bool contaminant = false;
    bool fragmented = false;
};

struct Fixture {
    vecstore::EmbeddingMatrix vectors;
    std::vector<RowLabel> labels;
    std::vector<vecstore::Vector> centers;  // indexed by concept_id
};

// Throws ArgumentError when separation <= 4 * sigma_in.
Fixture gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Documents plus paragraph-level vectors for a fixture, so the full pipeline
// (including the coherence filter) can run on it.
struct FixtureCorpus {
    corpus::DocumentSet documents;
    vecstore::EmbeddingMatrix sequence_vectors;  // id = document id
    vecstore::EmbeddingMatrix unit_vectors;      // id = "<doc id>#<unit index>"
};

FixtureCorpus make_fixture_corpus(const Fixture& fixture, const SyntheticSpec& spec,
                                  std::uint64_t seed);

// Translation pairs for the alignment-resistance check: island rows get a translated
// vector displaced by a fixed offset, universal rows a fresh draw around the same center.
struct PairFixtureRow {
    std::string id;
    std::string lang;
    bool island = false;
    vecstore::Vector original;
    vecstore::Vector translated;
};

std::vector<PairFixtureRow> make_translation_pairs(const Fixture& fixture,
                                                   const SyntheticSpec& spec,
                                                   std::size_t per_language_group,
                                                   double displacement, std::uint64_t seed);

}  // namespace cmine::synthetic
