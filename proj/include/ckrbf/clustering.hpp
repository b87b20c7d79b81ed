#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "ckrbf/error.hpp"
#include "ckrbf/rng.hpp"

namespace ckrbf {

// Result of a k-means run. `assignments[i]` is the index of the centroid
// nearest to row i (ties broken toward the lowest index); `inertia` is the
// summed squared distance to assigned centroids.
struct Clustering {
    Eigen::MatrixXd centroids;  // k x d
    std::vector<int> assignments;
    double inertia = 0.0;
    int k = 0;
    std::uint64_t seed = 0;
};

namespace detail {

// Index of the nearest centroid; on exact distance ties the lowest index wins.
inline int nearest_centroid(const Eigen::MatrixXd& centroids,
                            const Eigen::RowVectorXd& x, double* dist2_out = nullptr) {
    int best = 0;
    double best_d = (centroids.row(0) - x).squaredNorm();
    for (Eigen::Index c = 1; c < centroids.rows(); ++c) {
        const double d = (centroids.row(c) - x).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    if (dist2_out) *dist2_out = best_d;
    return best;
}

}  // namespace detail

// k-means++ seeding: first centroid uniform, each later one sampled with
// probability proportional to squared distance from the chosen set. If all
// remaining squared distances are zero, falls back to a uniform draw among
// the not-yet-chosen rows.
inline Eigen::MatrixXd kmeans_pp_seed(const Eigen::MatrixXd& X, int k,
                                      std::mt19937_64& rng) {
    const Eigen::Index n = X.rows();
    if (k < 1) throw ArgumentError("cluster count must be >= 1");
    if (n < k) throw ArgumentError("fewer samples than clusters");

    std::vector<Eigen::Index> chosen;
    chosen.reserve(static_cast<std::size_t>(k));
    chosen.push_back(static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(n))));

    Eigen::VectorXd dist2 = (X.rowwise() - X.row(chosen[0])).rowwise().squaredNorm();
    while (static_cast<int>(chosen.size()) < k) {
        const double total = dist2.sum();
        Eigen::Index next;
        if (total > 0.0) {
            const double target = uniform_real(rng) * total;
            double acc = 0.0;
            next = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += dist2[i];
                if (acc > target) {
                    next = i;
                    break;
                }
            }
        } else {
            // All points coincide with a chosen centroid; pick uniformly among
            // rows not yet selected.
            std::vector<Eigen::Index> rest;
            for (Eigen::Index i = 0; i < n; ++i)
                if (std::find(chosen.begin(), chosen.end(), i) == chosen.end())
                    rest.push_back(i);
            next = rest[uniform_index(rng, rest.size())];
        }
        chosen.push_back(next);
        dist2 = dist2.cwiseMin((X.rowwise() - X.row(next)).rowwise().squaredNorm());
    }

    Eigen::MatrixXd centroids(k, X.cols());
    for (int c = 0; c < k; ++c) centroids.row(c) = X.row(chosen[static_cast<std::size_t>(c)]);
    return centroids;
}

// Lloyd iterations from the given centroids until the assignment vector
// repeats, capped at `max_iter` rounds. A cluster that empties is repaired by
// moving its centroid to the point farthest from its current assignment.
// When `trace` is given, the inertia of each assignment pass is appended.
inline Clustering lloyd(const Eigen::MatrixXd& X, Eigen::MatrixXd centroids,
                        int max_iter = 300, std::vector<double>* trace = nullptr) {
    const Eigen::Index n = X.rows();
    const int k = static_cast<int>(centroids.rows());
    std::vector<int> assign(static_cast<std::size_t>(n), -1);
    double inertia = 0.0;

    for (int iter = 0; iter < max_iter; ++iter) {
        std::vector<int> next(static_cast<std::size_t>(n));
        inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double d2;
            next[static_cast<std::size_t>(i)] = detail::nearest_centroid(centroids, X.row(i), &d2);
            inertia += d2;
        }
        if (trace) trace->push_back(inertia);

        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (int a : next) ++counts[static_cast<std::size_t>(a)];
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            // Repair: steal the point with the largest distance to its
            // assigned centroid.
            Eigen::Index worst = 0;
            double worst_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double d = (X.row(i) - centroids.row(next[static_cast<std::size_t>(i)])).squaredNorm();
                if (d > worst_d &&
                    counts[static_cast<std::size_t>(next[static_cast<std::size_t>(i)])] > 1) {
                    worst_d = d;
                    worst = i;
                }
            }
            --counts[static_cast<std::size_t>(next[static_cast<std::size_t>(worst)])];
            next[static_cast<std::size_t>(worst)] = c;
            counts[static_cast<std::size_t>(c)] = 1;
        }

        if (next == assign) break;
        assign = std::move(next);

        centroids.setZero();
        for (Eigen::Index i = 0; i < n; ++i)
            centroids.row(assign[static_cast<std::size_t>(i)]) += X.row(i);
        for (int c = 0; c < k; ++c)
            centroids.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }

    // Recompute the final inertia against the final centroids.
    inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        inertia += (X.row(i) - centroids.row(assign[static_cast<std::size_t>(i)])).squaredNorm();

    Clustering out;
    out.centroids = std::move(centroids);
    out.assignments = std::move(assign);
    out.inertia = inertia;
    out.k = k;
    return out;
}

// Full k-means: `restarts` independent k-means++ / Lloyd runs, keeping the
// one with the lowest inertia (first such run on ties). Deterministic for a
// fixed (X, k, seed, restarts).
inline Clustering kmeans_fit(const Eigen::MatrixXd& X, int k, std::uint64_t seed,
                             int restarts = 10, int max_iter = 300) {
    if (restarts < 1) throw ArgumentError("restart count must be >= 1");
    Clustering best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
        Clustering cur = lloyd(X, kmeans_pp_seed(X, k, rng), max_iter);
        if (cur.inertia < best.inertia) best = std::move(cur);
    }
    best.seed = seed;
    return best;
}

// Nearest-centroid cell for a new point (same tie rule as training).
inline int assign(const Clustering& model, const Eigen::RowVectorXd& x) {
    if (x.size() != model.centroids.cols())
        throw ArgumentError("clustering dimension mismatch");
    return detail::nearest_centroid(model.centroids, x);
}

inline std::vector<int> assign_clusters(const Clustering& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.centroids.cols())
        throw ArgumentError("clustering dimension mismatch");
    std::vector<int> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        out[static_cast<std::size_t>(i)] = detail::nearest_centroid(model.centroids, X.row(i));
    return out;
}

}  // namespace ckrbf
