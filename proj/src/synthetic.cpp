#include "cmine/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "cmine/error.hpp"
#include "cmine/random.hpp"

namespace cmine::synthetic {

using vecstore::EmbeddingMatrix;
using vecstore::Vector;

std::string to_string(ConceptKind kind) {
    return kind == ConceptKind::universal ? "universal" : "island";
}

namespace {

Vector draw_around(const Vector& center, double sigma, Rng& rng) {
    Vector v(center.size());
    for (std::size_t j = 0; j < v.size(); ++j)
        v[j] = static_cast<float>(center[j] + (sigma > 0.0 ? sigma * rng.normal() : 0.0));
    return v;
}

std::string padded(std::size_t x, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*zu", width, x);
    return buf;
}

}  // namespace

Fixture gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.languages.empty()) throw ArgumentError("synthetic spec needs languages");
    if (spec.dim == 0) throw ArgumentError("synthetic spec needs a positive dimension");
    if (spec.sigma_in < 0.0) throw ArgumentError("sigma_in must be non-negative");
    if (spec.separation <= 4.0 * spec.sigma_in)
        throw ArgumentError("non-separable spec: separation must exceed 4 * sigma_in");
    const std::size_t per_lang_concepts = spec.universal_concepts + spec.islands_per_language;
    if (per_lang_concepts == 0) throw ArgumentError("synthetic spec has no concepts");

    Rng rng(derive_seed(seed, "synthetic"));
    const std::size_t L = spec.languages.size();
    const std::size_t total = spec.universal_concepts + L * spec.islands_per_language;

    // Typical pairwise distance of 2 * separation; rejection enforces the minimum.
    const double scale = 2.0 * spec.separation / std::sqrt(2.0 * static_cast<double>(spec.dim));
    Fixture fx;
    fx.centers.reserve(total);
    while (fx.centers.size() < total) {
        bool placed = false;
        for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
            Vector c(spec.dim);
            for (auto& x : c) x = static_cast<float>(scale * rng.normal());
            placed = true;
            for (const auto& other : fx.centers)
                if (vecstore::distance(c, other, vecstore::Metric::euclidean) < spec.separation) {
                    placed = false;
                    break;
                }
            if (placed) fx.centers.push_back(std::move(c));
        }
        if (!placed) throw ArgumentError("cannot place concept centers at the requested separation");
    }

    auto island_id = [&](std::size_t lang_index, std::size_t i) {
        return spec.universal_concepts + lang_index * spec.islands_per_language + i;
    };

    fx.vectors = EmbeddingMatrix(spec.dim);
    for (std::size_t li = 0; li < L; ++li) {
        const std::string& lang = spec.languages[li];
        std::vector<std::size_t> concept_of(spec.entries_per_language);
        for (std::size_t e = 0; e < concept_of.size(); ++e) concept_of[e] = e % per_lang_concepts;
        for (std::size_t e = concept_of.size(); e > 1; --e) std::swap(concept_of[e - 1], concept_of[rng.below(e)]);

        for (std::size_t e = 0; e < concept_of.size(); ++e) {
            RowLabel label;
            label.lang = lang;
            label.concept_lang = lang;
            if (concept_of[e] < spec.universal_concepts) {
                label.kind = ConceptKind::universal;
                label.concept_id = concept_of[e];
                label.concept_lang.clear();
            } else {
                label.kind = ConceptKind::island;
                label.concept_id = island_id(li, concept_of[e] - spec.universal_concepts);
            }
            label.fragmented = rng.uniform() < spec.fragmented_fraction;
            fx.vectors.append(lang + "-" + padded(e, 6), lang,
                              draw_around(fx.centers[label.concept_id], spec.sigma_in, rng));
            fx.labels.push_back(std::move(label));
        }
    }

    for (std::size_t li = 0; li < L && L > 1; ++li) {
        for (std::size_t i = 0; i < spec.islands_per_language; ++i) {
            for (std::size_t c = 0; c < spec.contaminants_per_island; ++c) {
                const std::string& other = spec.languages[(li + 1 + c % (L - 1)) % L];
                RowLabel label;
                label.kind = ConceptKind::island;
                label.concept_id = island_id(li, i);
                label.lang = other;
                label.concept_lang = spec.languages[li];
                label.contaminant = true;
                label.fragmented = false;
                fx.vectors.append(other + "-c" + padded(label.concept_id, 4) + "-" + padded(c, 2),
                                  other, draw_around(fx.centers[label.concept_id], spec.sigma_in, rng));
                fx.labels.push_back(std::move(label));
            }
        }
    }
    return fx;
}

FixtureCorpus make_fixture_corpus(const Fixture& fx, const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.min_units == 0 || spec.max_units < spec.min_units)
        throw ArgumentError("unit count range is empty");
    Rng rng(derive_seed(seed, "fixture-corpus"));
    FixtureCorpus out;
    out.sequence_vectors = EmbeddingMatrix(fx.vectors.dim());
    out.unit_vectors = EmbeddingMatrix(fx.vectors.dim());
    std::vector<corpus::Document> docs;
    docs.reserve(fx.vectors.rows());

    for (std::size_t r = 0; r < fx.vectors.rows(); ++r) {
        const RowLabel& label = fx.labels[r];
        corpus::Document doc;
        doc.id = fx.vectors.id(r);
        doc.lang = label.lang;
        doc.title = label.lang + " " + to_string(label.kind) + " concept " +
                    std::to_string(label.concept_id) + " entry " + doc.id;
        const std::size_t units = spec.min_units + rng.below(spec.max_units - spec.min_units + 1);
        const Vector base(fx.vectors.row(r).begin(), fx.vectors.row(r).end());
        for (std::size_t u = 0; u < units; ++u) {
            doc.paragraphs.push_back("Paragraph " + std::to_string(u + 1) + " of " + doc.id +
                                     " describing concept " + std::to_string(label.concept_id) + ".");
            Vector v;
            if (label.fragmented) {
                v.resize(base.size());
                for (auto& x : v) x = static_cast<float>(rng.normal());
            } else {
                v = draw_around(base, spec.unit_sigma, rng);
            }
            out.unit_vectors.append(doc.id + "#" + std::to_string(u), doc.lang, v);
        }
        out.sequence_vectors.append(doc.id, doc.lang, fx.vectors.row(r));
        docs.push_back(std::move(doc));
    }
    out.documents = corpus::DocumentSet(std::move(docs), {"synthetic", seed});
    return out;
}

std::vector<PairFixtureRow> make_translation_pairs(const Fixture& fx, const SyntheticSpec& spec,
                                                   std::size_t per_language_group,
                                                   double displacement, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "translation-pairs"));
    Vector offset(fx.vectors.dim());
    double norm = 0.0;
    for (auto& x : offset) {
        x = static_cast<float>(rng.normal());
        norm += static_cast<double>(x) * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : offset) x = static_cast<float>(x * displacement / norm);

    std::vector<PairFixtureRow> out;
    for (const auto& lang : spec.languages) {
        std::size_t islands = 0;
        std::size_t universals = 0;
        for (std::size_t r = 0; r < fx.vectors.rows(); ++r) {
            const RowLabel& label = fx.labels[r];
            if (label.lang != lang || label.contaminant) continue;
            const bool island = label.kind == ConceptKind::island;
            std::size_t& taken = island ? islands : universals;
            if (taken >= per_language_group) continue;
            ++taken;
            PairFixtureRow row;
            row.id = fx.vectors.id(r);
            row.lang = lang;
            row.island = island;
            row.original.assign(fx.vectors.row(r).begin(), fx.vectors.row(r).end());
            if (island) {
                row.translated = row.original;
                for (std::size_t j = 0; j < offset.size(); ++j) row.translated[j] += offset[j];
            } else {
                row.translated = draw_around(fx.centers[label.concept_id], spec.sigma_in, rng);
            }
            out.push_back(std::move(row));
        }
    }
    return out;
}

}  // namespace cmine::synthetic
