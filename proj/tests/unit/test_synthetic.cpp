#include <map>

#include "cmine/error.hpp"
#include "cmine/mining.hpp"
#include "cmine/synthetic.hpp"
#include "doctest.h"

using namespace cmine;
using namespace cmine::synthetic;

TEST_CASE("zero-noise fixtures collapse onto their centers") {
    SyntheticSpec spec;
    spec.languages = {"en", "zh"};
    spec.entries_per_language = 20;
    spec.universal_concepts = 1;
    spec.islands_per_language = 0;
    spec.sigma_in = 0.0;
    spec.dim = 4;
    auto fx = gen_synthetic(spec, 3);
    for (std::size_t r = 0; r < fx.vectors.rows(); ++r)
        CHECK(vecstore::Vector(fx.vectors.row(r).begin(), fx.vectors.row(r).end()) == fx.centers[0]);

    spec.universal_concepts = 0;
    spec.islands_per_language = 1;
    fx = gen_synthetic(spec, 3);
    REQUIRE(fx.centers.size() == 2);
    CHECK(fx.centers[0] != fx.centers[1]);
    for (std::size_t r = 0; r < fx.vectors.rows(); ++r) {
        CHECK(fx.labels[r].kind == ConceptKind::island);
        CHECK(fx.labels[r].concept_id == (fx.labels[r].lang == "en" ? 0u : 1u));
    }
}

TEST_CASE("fixture labels are recoverable by nearest center") {
    SyntheticSpec spec;  // 6 languages x 5000, 50 universal, 10 islands, d=64
    const auto fx = gen_synthetic(spec, 1);
    CHECK(fx.vectors.rows() == 30000);
    CHECK(fx.centers.size() == 110);
    for (std::size_t a = 0; a < fx.centers.size(); ++a)
        for (std::size_t b = a + 1; b < fx.centers.size(); ++b)
            CHECK(vecstore::distance(fx.centers[a], fx.centers[b], vecstore::Metric::euclidean) >= spec.separation);
    std::size_t errors = 0;
    for (std::size_t r = 0; r < fx.vectors.rows(); ++r) {
        std::size_t best = 0;
        double best_d = 1e300;
        for (std::size_t c = 0; c < fx.centers.size(); ++c) {
            const double d = vecstore::squared_euclidean(fx.vectors.row(r), fx.centers[c]);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        if (best != fx.labels[r].concept_id) ++errors;
    }
    CHECK(errors == 0);
}

TEST_CASE("fixture generation is deterministic and validated") {
    SyntheticSpec spec;
    spec.entries_per_language = 100;
    spec.contaminants_per_island = 1;
    const auto a = gen_synthetic(spec, 9);
    const auto b = gen_synthetic(spec, 9);
    CHECK(a.vectors == b.vectors);
    std::size_t contaminants = 0;
    for (const auto& l : a.labels)
        if (l.contaminant) {
            ++contaminants;
            CHECK(l.lang != l.concept_lang);
        }
    CHECK(contaminants == 60);

    spec.separation = 0.2;
    CHECK_THROWS_AS(gen_synthetic(spec, 1), ArgumentError);
}

TEST_CASE("fixture corpus carries units for every document") {
    SyntheticSpec spec;
    spec.languages = {"en", "fr"};
    spec.entries_per_language = 50;
    spec.universal_concepts = 2;
    spec.islands_per_language = 1;
    const auto fx = gen_synthetic(spec, 2);
    const auto fc = make_fixture_corpus(fx, spec, 3);
    CHECK(fc.documents.size() == 100);
    const auto units = mining::group_units(fc.unit_vectors);
    for (const auto& d : fc.documents.docs()) {
        REQUIRE(units.count(d.id));
        CHECK(units.at(d.id).size() == d.paragraphs.size());
        CHECK(d.paragraphs.size() >= spec.min_units);
        CHECK(d.paragraphs.size() <= spec.max_units);
    }
}
