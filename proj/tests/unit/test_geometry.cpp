#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cmine/error.hpp"
#include "cmine/geometry.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace cmine;
using namespace cmine::geometry;
using cmine::testing::matrix_of;
using cmine::testing::random_matrix;

namespace {

std::vector<double> column_means(const EmbeddingMatrix& m, const std::vector<std::size_t>& rows) {
    std::vector<double> mean(m.dim(), 0.0);
    for (auto r : rows)
        for (std::size_t j = 0; j < m.dim(); ++j) mean[j] += m.row(r)[j];
    for (auto& x : mean) x /= static_cast<double>(rows.size());
    return mean;
}

double sqdist(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
    return s;
}

// Random orthogonal matrix via QR of a Gaussian matrix.
Eigen::MatrixXd random_rotation(std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd a(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) a(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    return qr.householderQ();
}

EmbeddingMatrix transform(const EmbeddingMatrix& m, const Eigen::MatrixXd& q, double offset) {
    EmbeddingMatrix out(m.dim());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        Eigen::VectorXd x(m.dim());
        for (std::size_t j = 0; j < m.dim(); ++j) x(j) = m.row(r)[j];
        Eigen::VectorXd y = q * x;
        Vector v(m.dim());
        for (std::size_t j = 0; j < m.dim(); ++j) v[j] = static_cast<float>(y(j) + offset);
        out.append(m.id(r), m.lang(r), v);
    }
    return out;
}

}  // namespace

TEST_CASE("kmeans with k=1 gives the mean and total variance") {
    const auto m = random_matrix(37, 5, 2);
    const auto g = kmeans(m, 1, 9);
    std::vector<std::size_t> all(m.rows());
    std::iota(all.begin(), all.end(), 0);
    const auto mean = column_means(m, all);
    double total = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t j = 0; j < m.dim(); ++j) total += (m.row(r)[j] - mean[j]) * (m.row(r)[j] - mean[j]);
    for (std::size_t j = 0; j < m.dim(); ++j) CHECK(g.centroids[0][j] == doctest::Approx(mean[j]).epsilon(1e-6));
    CHECK(g.inertia == doctest::Approx(total).epsilon(1e-6));
}

TEST_CASE("kmeans separates zero-noise blobs") {
    std::vector<Vector> rows;
    for (int i = 0; i < 10; ++i) rows.push_back(i % 2 ? Vector{10, 10} : Vector{0, 0});
    const auto m = matrix_of(rows);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto g = kmeans(m, 2, seed);
        for (std::size_t r = 0; r < rows.size(); ++r) CHECK(g.assign[r] == g.assign[r % 2]);
        CHECK(g.assign[0] != g.assign[1]);
        CHECK(g.inertia == 0.0);
    }
}

TEST_CASE("kmeans invariants on random data") {
    Rng rng(1);
    for (int t = 0; t < 30; ++t) {
        const auto m = random_matrix(20 + rng.below(150), 2 + rng.below(10), rng.next());
        const std::size_t k = 1 + rng.below(12);
        KMeansOptions opts;
        opts.tol = 0.0;
        opts.max_iter = 500;
        opts.workers = 1 + rng.below(4);
        const auto g = kmeans(m, k, rng.next(), opts);
        REQUIRE(g.assign.size() == m.rows());
        const auto members = g.members();
        for (std::size_t c = 0; c < k; ++c) {
            REQUIRE_FALSE(members[c].empty());
            const auto mean = column_means(m, members[c]);
            for (std::size_t j = 0; j < m.dim(); ++j) CHECK(std::abs(g.centroids[c][j] - mean[j]) < 1e-5);
        }
        for (std::size_t i = 1; i < g.inertia_history.size(); ++i)
            CHECK(g.inertia_history[i] <= g.inertia_history[i - 1] * (1 + 1e-12));
        // Converged without hitting the cap: every row sits at its nearest centroid.
        if (g.iterations < opts.max_iter) {
            for (std::size_t r = 0; r < m.rows(); ++r) {
                const double own = sqdist(m.row(r), g.centroids[g.assign[r]]);
                for (std::size_t c = 0; c < k; ++c) CHECK(own <= sqdist(m.row(r), g.centroids[c]) + 1e-9);
            }
        }
    }
}

TEST_CASE("kmeans is deterministic and partition independent") {
    const auto m = random_matrix(300, 8, 5);
    KMeansOptions one, many;
    many.workers = 7;
    const auto a = kmeans(m, 9, 123, one);
    const auto b = kmeans(m, 9, 123, one);
    const auto c = kmeans(m, 9, 123, many);
    CHECK(a.assign == b.assign);
    CHECK(a.assign == c.assign);
    CHECK(a.centroids == c.centroids);
    CHECK(a.inertia == c.inertia);
}

TEST_CASE("kmeans argument errors and degenerate input") {
    const auto m = random_matrix(5, 2, 1);
    CHECK_THROWS_AS(kmeans(m, 0, 1), ArgumentError);
    CHECK_THROWS_AS(kmeans(m, 6, 1), ArgumentError);
    const auto same = matrix_of({{1, 1}, {1, 1}, {1, 1}});
    const auto g = kmeans(same, 3, 1);
    CHECK(g.assign.size() == 3);
    CHECK(g.inertia == 0.0);
}

TEST_CASE("local_dispersion examples") {
    const auto line = matrix_of({{0}, {1}, {2}, {10}});
    const auto d = local_dispersion(line, 2);
    CHECK(d[0] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(d[3] == doctest::Approx(8.5).epsilon(1e-12));
    CHECK(d[1] == doctest::Approx(1.0).epsilon(1e-12));

    const auto same = matrix_of({{3, 3}, {3, 3}, {3, 3}, {3, 3}});
    for (double x : local_dispersion(same, 2)) CHECK(x == 0.0);

    CHECK_THROWS_AS(local_dispersion(line, 4), ArgumentError);
    CHECK_THROWS_AS(local_dispersion(line, 0), ArgumentError);
}

TEST_CASE("nearest_neighbors breaks ties by lower row") {
    const auto m = matrix_of({{0}, {1}, {-1}, {2}, {-2}});
    const auto nb = nearest_neighbors(m, 3);
    REQUIRE(nb[0].size() == 3);
    CHECK(nb[0][0].row == 1);
    CHECK(nb[0][1].row == 2);
    CHECK(nb[0][2].row == 3);
}

TEST_CASE("local_dispersion matches brute force on a random matrix") {
    const auto m = random_matrix(50, 8, 77);
    const auto nb = nearest_neighbors(m, 5);
    const auto delta = local_dispersion(m, 5);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        std::vector<std::pair<double, std::size_t>> all;
        for (std::size_t j = 0; j < m.rows(); ++j)
            if (j != i) all.emplace_back(std::sqrt(sqdist(m.row(i), m.row(j))), j);
        std::sort(all.begin(), all.end());
        double s = 0.0;
        for (std::size_t t = 0; t < 5; ++t) {
            CHECK(nb[i][t].row == all[t].second);
            s += all[t].first;
        }
        CHECK(std::abs(delta[i] - s / 5) < 1e-9);
    }
}

TEST_CASE("local_dispersion is rotation and translation invariant") {
    const auto m = random_matrix(60, 6, 8);
    const auto moved = transform(m, random_rotation(6, 3), 2.5);
    const auto a = local_dispersion(m, 5);
    const auto b = local_dispersion(moved, 5);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-5);
}

TEST_CASE("coherence_entropy examples") {
    const std::vector<Vector> orth{{1, 0}, {0, 1}};
    CHECK(coherence_entropy(orth) == 0.0);
    const std::vector<Vector> same(4, Vector{0.3f, -1.2f, 2.0f});
    CHECK(std::abs(coherence_entropy(same) - std::log(4.0)) < 1e-12);
    const std::vector<Vector> one{{1, 2}};
    CHECK(coherence_entropy(one) == 0.0);

    // Unit vectors whose Gram matrix is [[1,.5,.2],[.5,1,.4],[.2,.4,1]] (Cholesky rows);
    // reference value evaluated independently in double precision.
    const std::vector<Vector> chol{{1.0f, 0.0f, 0.0f},
                                   {0.5f, 0.8660254037844386f, 0.0f},
                                   {0.2f, 0.3464101615137755f, 0.9165151389911680f}};
    CHECK(std::abs(coherence_entropy(chol) - 0.94708703594141441) < 1e-6);

    // Opposite units clamp to zero similarity.
    const std::vector<Vector> opposite{{1, 0}, {-1, 0}};
    CHECK(coherence_entropy(opposite) == 0.0);

    CHECK_THROWS_AS(coherence_entropy(std::vector<Vector>{{0, 0}, {1, 0}}), DomainError);
    CHECK_THROWS_AS(coherence_entropy(std::vector<Vector>{}), ArgumentError);
}

TEST_CASE("coherence_entropy bounds and permutation invariance") {
    Rng rng(21);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 1 + rng.below(10);
        std::vector<Vector> units(n, Vector(4));
        for (auto& u : units)
            for (auto& x : u) x = static_cast<float>(rng.normal());
        const double h = coherence_entropy(units);
        CHECK(h >= 0.0);
        CHECK(h <= std::log(static_cast<double>(n)) + 1e-12);
        std::vector<Vector> shuffled = units;
        std::reverse(shuffled.begin(), shuffled.end());
        CHECK(std::abs(coherence_entropy(shuffled) - h) < 1e-12);
    }
}

TEST_CASE("pca_project degenerate inputs") {
    const auto same = matrix_of({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
    const auto p = pca_project(same, 2);
    for (const auto& c : p.coords)
        for (double x : c) CHECK(x == 0.0);

    std::vector<Vector> line;
    for (int i = 0; i < 20; ++i) line.push_back({float(i), float(2 * i), float(-i)});
    const auto q = pca_project(matrix_of(line), 2);
    for (const auto& c : q.coords) CHECK(std::abs(c[1]) < 1e-6);
    CHECK(q.explained_variance[0] >= q.explained_variance[1]);

    CHECK_THROWS_AS(pca_project(matrix_of({{1, 2}}), 1), ArgumentError);
    CHECK_THROWS_AS(pca_project(matrix_of({{1, 2}, {3, 4}}), 3), ArgumentError);
}

TEST_CASE("pca_project matches a dense eigensolver") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        const auto m = random_matrix(40, 6, seed);
        const auto p = pca_project(m, 2);

        Eigen::MatrixXd x(40, 6);
        for (std::size_t r = 0; r < 40; ++r)
            for (std::size_t j = 0; j < 6; ++j) x(r, j) = m.row(r)[j];
        x.rowwise() -= x.colwise().mean();
        const Eigen::MatrixXd cov = x.transpose() * x / 39.0;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        for (int c = 0; c < 2; ++c) {
            const Eigen::VectorXd v = es.eigenvectors().col(5 - c);
            CHECK(p.explained_variance[c] == doctest::Approx(es.eigenvalues()(5 - c)).epsilon(1e-6));
            const Eigen::VectorXd proj = x * v;
            const double sign = (proj(0) * p.coords[0][c] >= 0) ? 1.0 : -1.0;
            for (int r = 0; r < 40; ++r) CHECK(std::abs(sign * proj(r) - p.coords[r][c]) < 1e-5);
            // Largest-magnitude loading is positive.
            const auto& comp = p.components[c];
            const auto big = std::max_element(comp.begin(), comp.end(),
                                              [](float a, float b) { return std::abs(a) < std::abs(b); });
            CHECK(*big > 0);
        }
    }
}

TEST_CASE("full-rank pca preserves pairwise distances") {
    const auto m = random_matrix(25, 4, 12);
    const auto p = pca_project(m, 4);
    for (std::size_t a = 0; a < m.rows(); ++a)
        for (std::size_t b = a + 1; b < m.rows(); ++b) {
            double s = 0.0;
            for (std::size_t j = 0; j < 4; ++j) s += (p.coords[a][j] - p.coords[b][j]) * (p.coords[a][j] - p.coords[b][j]);
            CHECK(std::abs(std::sqrt(s) - std::sqrt(sqdist(m.row(a), m.row(b)))) < 1e-5);
        }
}
