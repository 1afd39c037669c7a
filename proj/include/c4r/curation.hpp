#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "c4r/rng.hpp"
#include "c4r/tensor.hpp"

namespace c4r {

// Row-major n x d matrix of embeddings with optional per-row identifiers.
struct EmbeddingSet {
    std::size_t dim = 0;
    std::vector<Vec> rows;
    std::vector<std::string> ids; // empty or one per row

    std::size_t size() const { return rows.size(); }

    void add(Vec v, std::string id = "") {
        if (dim == 0) dim = v.size();
        require(v.size() == dim, ErrorKind::Data, "EmbeddingSet: row dimension mismatch");
        rows.push_back(std::move(v));
        if (!id.empty() || !ids.empty()) ids.push_back(std::move(id));
    }
};

// Greedy leader dedup in input order: keep row i iff its max cosine
// similarity to every previously kept row is < tau. Order-sensitive by
// construction; deterministic for a fixed input order.
inline std::vector<std::size_t> dedup(const EmbeddingSet& set, double tau) {
    require(tau > 0.0 && tau <= 1.0, ErrorKind::Data, "dedup: tau must be in (0, 1]");
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < set.size(); ++i) {
        require(norm(set.rows[i]) > 0.0, ErrorKind::Data,
                "dedup: zero-norm row " + std::to_string(i));
        bool duplicate = false;
        for (std::size_t j : kept)
            if (cosine_similarity(set.rows[i], set.rows[j]) >= tau) {
                duplicate = true;
                break;
            }
        if (!duplicate) kept.push_back(i);
    }
    return kept; // ascending because the scan is in order
}

// Indices of the k largest cosine similarities, descending; ties broken by
// lower index.
inline std::vector<std::size_t> retrieve_neighbors(const Vec& query, const EmbeddingSet& pool,
                                                   std::size_t k) {
    require(k >= 1, ErrorKind::Data, "retrieve_neighbors: k must be >= 1");
    require(pool.size() > 0, ErrorKind::Data, "retrieve_neighbors: empty pool");
    require(query.size() == pool.dim, ErrorKind::Data,
            "retrieve_neighbors: dimension mismatch");
    std::vector<std::pair<double, std::size_t>> scored(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
        scored[i] = {cosine_similarity(query, pool.rows[i]), i};
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::size_t take = std::min(k, pool.size());
    std::vector<std::size_t> out(take);
    for (std::size_t i = 0; i < take; ++i) out[i] = scored[i].second;
    return out;
}

struct KMeansResult {
    std::vector<Vec> centroids;
    std::vector<std::size_t> assignment;
    double inertia = 0.0;
    std::size_t iterations = 0;
};

namespace detail {

inline double sq_dist(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace detail

// k-means++ seeding followed by Lloyd iterations until assignment fixpoint or
// max_iters. Callers intending cosine geometry L2-normalize rows first. Empty
// clusters steal the point farthest from its centroid. Inertia is asserted
// non-increasing across iterations.
inline KMeansResult kmeans(const EmbeddingSet& set, std::size_t k, std::size_t max_iters,
                           std::uint64_t seed) {
    const std::size_t n = set.size(), d = set.dim;
    require(k >= 1 && k <= n, ErrorKind::Data, "kmeans: need 1 <= k <= n");
    Rng rng(mix_seed(seed, 0x4a3aULL));

    // k-means++ seeding
    std::vector<Vec> centroids;
    centroids.push_back(set.rows[rng.uniform_index(n)]);
    std::vector<double> d2(n);
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::max();
            for (const Vec& c : centroids) best = std::min(best, detail::sq_dist(set.rows[i], c));
            d2[i] = best;
            total += best;
        }
        std::size_t pick;
        if (total <= 0.0) {
            pick = rng.uniform_index(n);
        } else {
            double r = rng.uniform() * total, acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= r) { pick = i; break; }
            }
        }
        centroids.push_back(set.rows[pick]);
    }

    KMeansResult res;
    res.centroids = std::move(centroids);
    res.assignment.assign(n, 0);
    double prev_inertia = std::numeric_limits<double>::max();
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        // assign
        bool changed = false;
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best_c = 0;
            double best = detail::sq_dist(set.rows[i], res.centroids[0]);
            for (std::size_t c = 1; c < k; ++c) {
                double dist = detail::sq_dist(set.rows[i], res.centroids[c]);
                if (dist < best) { best = dist; best_c = c; }
            }
            if (res.assignment[i] != best_c) { res.assignment[i] = best_c; changed = true; }
            inertia += best;
        }
        require(inertia <= prev_inertia + 1e-9, ErrorKind::Numeric,
                "kmeans: inertia increased across an iteration");
        prev_inertia = inertia;
        res.inertia = inertia;
        res.iterations = iter + 1;
        if (!changed && iter > 0) break;

        // update
        std::vector<Vec> sums(k, Vec(d, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) sums[res.assignment[i]][j] += set.rows[i][j];
            ++counts[res.assignment[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // steal the point farthest from its current centroid
                std::size_t far_i = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    double dist = detail::sq_dist(set.rows[i], res.centroids[res.assignment[i]]);
                    if (dist > far_d) { far_d = dist; far_i = i; }
                }
                res.centroids[c] = set.rows[far_i];
                res.assignment[far_i] = c;
                prev_inertia = std::numeric_limits<double>::max(); // assignments moved by fiat
            } else {
                for (std::size_t j = 0; j < d; ++j)
                    res.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
            }
        }
    }

    // recompute exact final inertia against final centroids
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        inertia += detail::sq_dist(set.rows[i], res.centroids[res.assignment[i]]);
    res.inertia = inertia;
    return res;
}

} // namespace c4r
