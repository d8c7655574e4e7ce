#include "cmine/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cmine/error.hpp"
#include "cmine/parallel.hpp"
#include "cmine/random.hpp"

namespace cmine::geometry {

using vecstore::squared_euclidean;

std::vector<std::size_t> ClusterAssignment::sizes() const {
    std::vector<std::size_t> out(k, 0);
    for (std::size_t c : assign) ++out[c];
    return out;
}

std::vector<std::vector<std::size_t>> ClusterAssignment::members() const {
    std::vector<std::vector<std::size_t>> out(k);
    for (std::size_t r = 0; r < assign.size(); ++r) out[assign[r]].push_back(r);
    return out;
}

namespace {

double sq_dist(std::span<const float> x, const Vector& c) {
    return squared_euclidean(x, std::span<const float>(c));
}

Vector to_vector(std::span<const float> s) { return Vector(s.begin(), s.end()); }

// Greedy k-means++: each step draws several D^2-weighted candidates and keeps the one
// that lowers the potential most.
std::vector<Vector> seed_centroids(const EmbeddingMatrix& m, std::size_t k, Rng& rng) {
    const std::size_t n = m.rows();
    std::vector<Vector> centers;
    centers.reserve(k);
    centers.push_back(to_vector(m.row(rng.below(n))));

    std::vector<double> closest(n);
    for (std::size_t i = 0; i < n; ++i) closest[i] = sq_dist(m.row(i), centers[0]);

    const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
    std::vector<double> cumulative(n);
    std::vector<double> candidate_d(n);
    std::vector<double> best_d(n);
    for (std::size_t c = 1; c < k; ++c) {
        std::partial_sum(closest.begin(), closest.end(), cumulative.begin());
        const double total = cumulative.back();
        if (total <= 0.0) {
            // Every point already coincides with a center.
            centers.push_back(to_vector(m.row(rng.below(n))));
            continue;
        }
        double best_potential = std::numeric_limits<double>::infinity();
        std::size_t best = 0;
        for (std::size_t t = 0; t < trials; ++t) {
            const double target = rng.uniform() * total;
            std::size_t pick = static_cast<std::size_t>(
                std::upper_bound(cumulative.begin(), cumulative.end(), target) - cumulative.begin());
            pick = std::min(pick, n - 1);
            while (closest[pick] == 0.0 && pick + 1 < n) ++pick;
            double potential = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                candidate_d[i] = std::min(closest[i], squared_euclidean(m.row(i), m.row(pick)));
                potential += candidate_d[i];
            }
            if (potential < best_potential) {
                best_potential = potential;
                best = pick;
                best_d.swap(candidate_d);
            }
        }
        centers.push_back(to_vector(m.row(best)));
        closest.swap(best_d);
        best_d.resize(n);
    }
    return centers;
}

// Returns the summed inertia; per-row work is independent of the partitioning.
double assign_rows(const EmbeddingMatrix& m, const std::vector<Vector>& centroids,
                   std::vector<std::size_t>& assign, std::vector<double>& row_cost,
                   std::size_t workers) {
    parallel_for(m.rows(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_c = 0;
            for (std::size_t c = 0; c < centroids.size(); ++c) {
                const double d = sq_dist(m.row(i), centroids[c]);
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            assign[i] = best_c;
            row_cost[i] = best;
        }
    });
    double inertia = 0.0;
    for (double c : row_cost) inertia += c;
    return inertia;
}

void update_means(const EmbeddingMatrix& m, const std::vector<std::size_t>& assign,
                  std::vector<Vector>& centroids) {
    const std::size_t d = m.dim();
    std::vector<std::vector<double>> sums(centroids.size(), std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(centroids.size(), 0);
    for (std::size_t i = 0; i < assign.size(); ++i) {
        auto row = m.row(i);
        auto& s = sums[assign[i]];
        for (std::size_t j = 0; j < d; ++j) s[j] += row[j];
        ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t j = 0; j < d; ++j)
            centroids[c][j] = static_cast<float>(sums[c][j] / static_cast<double>(counts[c]));
    }
}

// Moves the point farthest from its centroid into each empty cluster.
void repair_empty(const EmbeddingMatrix& m, std::vector<std::size_t>& assign,
                  std::vector<Vector>& centroids) {
    for (;;) {
        std::vector<std::size_t> counts(centroids.size(), 0);
        for (std::size_t c : assign) ++counts[c];
        auto empty = std::find(counts.begin(), counts.end(), std::size_t{0});
        if (empty == counts.end()) return;

        double far = 0.0;
        std::size_t far_row = 0;
        for (std::size_t i = 0; i < assign.size(); ++i) {
            if (counts[assign[i]] < 2) continue;
            const double d = sq_dist(m.row(i), centroids[assign[i]]);
            if (d > far) {
                far = d;
                far_row = i;
            }
        }
        if (far <= 0.0) return;  // fewer distinct points than clusters
        const auto target = static_cast<std::size_t>(empty - counts.begin());
        assign[far_row] = target;
        update_means(m, assign, centroids);
    }
}

}  // namespace

ClusterAssignment kmeans(const EmbeddingMatrix& m, std::size_t k, std::uint64_t seed,
                         const KMeansOptions& options) {
    if (k == 0) throw ArgumentError("kmeans needs k >= 1");
    if (k > m.rows())
        throw ArgumentError("kmeans k=" + std::to_string(k) + " exceeds row count " +
                            std::to_string(m.rows()));

    Rng rng(seed);
    ClusterAssignment out;
    out.k = k;
    out.seed = seed;
    out.centroids = seed_centroids(m, k, rng);
    out.assign.assign(m.rows(), 0);
    std::vector<double> row_cost(m.rows(), 0.0);
    std::vector<std::size_t> previous;

    const std::size_t max_iter = std::max<std::size_t>(1, options.max_iter);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        const double inertia = assign_rows(m, out.centroids, out.assign, row_cost, options.workers);
        out.inertia_history.push_back(inertia);
        out.iterations = iter + 1;
        const bool unchanged = previous == out.assign;
        update_means(m, out.assign, out.centroids);
        repair_empty(m, out.assign, out.centroids);
        if (unchanged) break;
        if (iter > 0) {
            const double prev = out.inertia_history[iter - 1];
            if (prev - inertia <= options.tol * prev) break;
        }
        previous = out.assign;
    }

    out.inertia = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) out.inertia += sq_dist(m.row(i), out.centroids[out.assign[i]]);
    return out;
}

std::vector<std::vector<Neighbor>> nearest_neighbors(const EmbeddingMatrix& m, std::size_t k) {
    const std::size_t n = m.rows();
    if (n <= k)
        throw ArgumentError("need more than " + std::to_string(k) + " rows for kNN, got " +
                            std::to_string(n));
    std::vector<std::vector<Neighbor>> out(n);
    std::vector<Neighbor> all;
    all.reserve(n);
    auto closer = [](const Neighbor& a, const Neighbor& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.row < b.row;
    };
    for (std::size_t i = 0; i < n; ++i) {
        all.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            all.push_back({j, std::sqrt(squared_euclidean(m.row(i), m.row(j)))});
        }
        std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), closer);
        out[i].assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return out;
}

std::vector<double> local_dispersion(const EmbeddingMatrix& m, std::size_t k_nn) {
    if (k_nn == 0) throw ArgumentError("k_nn must be positive");
    const auto neighbors = nearest_neighbors(m, k_nn);
    std::vector<double> delta;
    delta.reserve(neighbors.size());
    for (const auto& nb : neighbors) {
        double s = 0.0;
        for (const auto& x : nb) s += x.distance;
        delta.push_back(s / static_cast<double>(k_nn));
    }
    return delta;
}

double coherence_entropy(std::span<const Vector> units) {
    const std::size_t n = units.size();
    if (n == 0) throw ArgumentError("coherence_entropy needs at least one unit");

    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (float x : units[i]) s += static_cast<double>(x) * x;
        if (s == 0.0) throw DomainError("zero unit vector");
        if (units[i].size() != units[0].size()) throw ArgumentError("unit vectors differ in length");
        norms[i] = std::sqrt(s);
    }

    std::vector<double> sim(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        sim[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t t = 0; t < units[i].size(); ++t)
                dot += static_cast<double>(units[i][t]) * units[j][t];
            const double c = std::max(0.0, std::min(1.0, dot / (norms[i] * norms[j])));
            sim[i * n + j] = c;
            sim[j * n + i] = c;
        }
    }

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) row_sum += sim[i * n + j];
        double h = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double p = sim[i * n + j] / row_sum;
            if (p > 0.0) h -= p * std::log(p);
        }
        total += h;
    }
    return total / static_cast<double>(n);
}

Projection pca_project(const EmbeddingMatrix& m, std::size_t dims) {
    const std::size_t n = m.rows();
    const std::size_t d = m.dim();
    if (n < 2) throw ArgumentError("pca_project needs at least two rows");
    if (dims == 0 || dims > std::min(n, d))
        throw ArgumentError("pca_project dims must be in [1, min(rows, dim)]");

    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += m.row(i)[j];
    for (auto& x : mean) x /= static_cast<double>(n);

    std::vector<double> centered(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) centered[i * d + j] = m.row(i)[j] - mean[j];

    std::vector<double> cov(d * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = &centered[i * d];
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = a; b < d; ++b) cov[a * d + b] += x[a] * x[b];
    }
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            cov[a * d + b] /= static_cast<double>(n - 1);
            cov[b * d + a] = cov[a * d + b];
        }
    double trace = 0.0;
    for (std::size_t a = 0; a < d; ++a) trace += cov[a * d + a];

    Projection out;
    out.coords.assign(n, std::vector<double>(dims, 0.0));
    std::vector<std::vector<double>> comps;

    auto orthogonalize = [&](std::vector<double>& v) {
        for (const auto& c : comps) {
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += v[j] * c[j];
            for (std::size_t j = 0; j < d; ++j) v[j] -= dot * c[j];
        }
    };
    auto normalize = [&](std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        s = std::sqrt(s);
        if (s > 0.0)
            for (auto& x : v) x /= s;
        return s;
    };

    constexpr double k_converged = 1e-8;
    constexpr std::size_t k_max_power_iter = 100000;
    const double zero_variance = 1e-12 * std::max(trace, 1e-300);
    Rng rng(0x5ca1ab1e);

    for (std::size_t c = 0; c < dims; ++c) {
        std::vector<double> v(d);
        for (auto& x : v) x = rng.normal();
        orthogonalize(v);
        normalize(v);

        double lambda = 0.0;
        std::vector<double> w(d);
        for (std::size_t it = 0; it < k_max_power_iter; ++it) {
            for (std::size_t a = 0; a < d; ++a) {
                double s = 0.0;
                for (std::size_t b = 0; b < d; ++b) s += cov[a * d + b] * v[b];
                w[a] = s;
            }
            orthogonalize(w);
            lambda = normalize(w);
            if (lambda <= zero_variance) break;
            double diff = 0.0;
            for (std::size_t j = 0; j < d; ++j) diff += (w[j] - v[j]) * (w[j] - v[j]);
            v.swap(w);
            if (std::sqrt(diff) < k_converged) break;
        }

        if (trace <= 0.0 || lambda <= zero_variance) {
            // No variance left: complete the basis with a canonical direction.
            lambda = 0.0;
            for (std::size_t e = 0; e < d; ++e) {
                std::vector<double> basis(d, 0.0);
                basis[e] = 1.0;
                orthogonalize(basis);
                if (normalize(basis) > 1e-6) {
                    v = basis;
                    break;
                }
            }
        } else {
            // Rayleigh quotient of the converged direction.
            double rq = 0.0;
            for (std::size_t a = 0; a < d; ++a) {
                double s = 0.0;
                for (std::size_t b = 0; b < d; ++b) s += cov[a * d + b] * v[b];
                rq += v[a] * s;
            }
            lambda = rq;
        }

        std::size_t largest = 0;
        for (std::size_t j = 1; j < d; ++j)
            if (std::abs(v[j]) > std::abs(v[largest])) largest = j;
        if (v[largest] < 0.0)
            for (auto& x : v) x = -x;

        // Deflate.
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) cov[a * d + b] -= lambda * v[a] * v[b];

        comps.push_back(v);
        out.explained_variance.push_back(lambda);
        for (std::size_t i = 0; i < n; ++i) {
            if (lambda == 0.0) continue;
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += centered[i * d + j] * v[j];
            out.coords[i][c] = s;
        }
    }
    for (const auto& c : comps) out.components.emplace_back(c.begin(), c.end());
    return out;
}

}  // namespace cmine::geometry
