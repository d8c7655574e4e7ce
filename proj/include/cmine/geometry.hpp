#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cmine/vecstore.hpp"

namespace cmine::geometry {

using vecstore::EmbeddingMatrix;
using vecstore::Vector;

struct ClusterAssignment {
    std::size_t k = 0;
    std::vector<std::size_t> assign;   // row -> cluster id in [0, k)
    std::vector<Vector> centroids;
    double inertia = 0.0;
    std::uint64_t seed = 0;
    std::size_t iterations = 0;
    // Inertia after every assignment step; non-increasing.
    std::vector<double> inertia_history;

    std::vector<std::size_t> sizes() const;
    // Row indices per cluster, each list ascending.
    std::vector<std::vector<std::size_t>> members() const;
};

struct KMeansOptions {
    std::size_t max_iter = 100;
    // Stop when the relative inertia change falls to or below this value.
    double tol = 1e-4;
    std::size_t workers = 1;
};

// k-means++ seeding (greedy, several candidates per step) followed by Lloyd
// iterations. Empty clusters are re-seeded at the point farthest from its centroid.
// Throws ArgumentError when k == 0 or k > rows.
ClusterAssignment kmeans(const EmbeddingMatrix& m, std::size_t k, std::uint64_t seed,
                         const KMeansOptions& options = {});

struct Neighbor {
    std::size_t row;
    double distance;
};

// Exact k nearest rows by Euclidean distance, self excluded, ties to the lower index.
std::vector<std::vector<Neighbor>> nearest_neighbors(const EmbeddingMatrix& m, std::size_t k);

// Mean Euclidean distance to the k_nn nearest rows. Throws ArgumentError if rows <= k_nn.
std::vector<double> local_dispersion(const EmbeddingMatrix& m, std::size_t k_nn = 5);

// Mean Shannon entropy (natural log) of the row-normalised cosine-similarity matrix
// of a document's units. Negative similarities are clamped to zero and the diagonal
// is included. Throws DomainError on a zero vector, ArgumentError on an empty list.
double coherence_entropy(std::span<const Vector> unit_vectors);

struct Projection {
    std::vector<std::vector<double>> coords;  // per row, `dims` values
    std::vector<Vector> components;
    std::vector<double> explained_variance;
};

// Mean-centred projection onto the leading covariance eigenvectors, found by power
// iteration with deflation. Each component's largest-magnitude loading is positive.
Projection pca_project(const EmbeddingMatrix& m, std::size_t dims = 2);

}  // namespace cmine::geometry
