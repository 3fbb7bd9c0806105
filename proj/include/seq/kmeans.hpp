#pragma once
#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "seq/errors.hpp"
#include "seq/feature_set.hpp"
#include "seq/matmul.hpp"
#include "seq/network.hpp"
#include "seq/parallel.hpp"
#include "seq/rng.hpp"
#include "seq/tensor.hpp"

namespace seq {

enum class KmeansInit { kmeanspp, forgy };

struct KmeansConfig {
    std::size_t k = 10;
    KmeansInit init = KmeansInit::kmeanspp;
    std::size_t max_iter = 300;
    double tol = 1e-6; // max centroid shift (L2) that counts as converged
    std::uint64_t seed = 1;
    std::size_t restarts = 1;
};

struct AssignResult {
    std::vector<int> assignments;
    std::vector<double> sqdist; // squared distance to the assigned centroid
};

// Nearest centroid per row, squared Euclidean, ties to the smallest index.
inline AssignResult assign(const Tensor& points, const Tensor& centroids) {
    if (points.cols() != centroids.cols())
        throw PreconditionError("assign: dimension mismatch (" + std::to_string(points.cols()) + " vs " +
                                std::to_string(centroids.cols()) + ")");
    const std::size_t n = points.rows(), k = centroids.rows(), d = points.cols();
    AssignResult res;
    res.assignments.resize(n);
    res.sqdist.resize(n);
    parallel_for(0, n, [&](std::size_t i) {
        const double* p = points.row_ptr(i);
        int best = 0;
        double best_d = sqdist4(p, centroids.row_ptr(0), d);
        for (std::size_t c = 1; c < k; ++c) {
            const double dist = sqdist4(p, centroids.row_ptr(c), d);
            if (dist < best_d) {
                best_d = dist;
                best = static_cast<int>(c);
            }
        }
        res.assignments[i] = best;
        res.sqdist[i] = best_d;
    });
    return res;
}

inline AssignResult assign(const FeatureSet& fs, const Tensor& centroids) {
    return assign(fs.matrix, centroids);
}

struct KmeansResult {
    Tensor centroids; // (K, d)
    std::vector<int> assignments;
    double inertia = 0.0;
    std::size_t iterations = 0;
    std::vector<double> inertia_trace; // one entry per assignment step
    std::size_t empty_repairs = 0;
    std::vector<std::string> warnings;
};

namespace detail {

inline Tensor init_centroids(const Tensor& points, std::size_t k, KmeansInit init, Rng& rng) {
    const std::size_t n = points.rows(), d = points.cols();
    Tensor centroids({k, d});
    auto copy_point = [&](std::size_t c, std::size_t p) {
        std::copy(points.row_ptr(p), points.row_ptr(p) + d, centroids.row_ptr(c));
    };
    if (init == KmeansInit::forgy) {
        // K distinct uniform rows via partial Fisher-Yates.
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
            std::swap(idx[i], idx[j]);
            copy_point(i, idx[i]);
        }
        return centroids;
    }
    // k-means++: first uniform, then D^2-weighted draws.
    copy_point(0, static_cast<std::size_t>(rng.next_below(n)));
    std::vector<double> best(n);
    parallel_for(0, n, [&](std::size_t i) {
        best[i] = sqdist4(points.row_ptr(i), centroids.row_ptr(0), d);
    });
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : best) total += v;
        std::size_t pick;
        if (total <= 0.0) {
            pick = static_cast<std::size_t>(rng.next_below(n));
        } else {
            const double u = rng.next_double() * total;
            double cum = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                cum += best[i];
                if (u < cum) {
                    pick = i;
                    break;
                }
            }
        }
        copy_point(c, pick);
        parallel_for(0, n, [&](std::size_t i) {
            const double dist = sqdist4(points.row_ptr(i), centroids.row_ptr(c), d);
            if (dist < best[i]) best[i] = dist;
        });
    }
    return centroids;
}

inline KmeansResult lloyd(const Tensor& points, const KmeansConfig& cfg, std::uint64_t seed) {
    const std::size_t n = points.rows(), d = points.cols(), k = cfg.k;
    Rng rng(seed);
    KmeansResult res;
    res.centroids = init_centroids(points, k, cfg.init, rng);

    std::vector<double> sums(k * d);
    std::vector<std::size_t> counts(k);
    for (std::size_t iter = 0; iter < cfg.max_iter; ++iter) {
        AssignResult a = assign(points, res.centroids);
        double inertia = 0.0;
        for (double v : a.sqdist) inertia += v;
        res.inertia_trace.push_back(inertia);
        res.assignments = std::move(a.assignments);
        res.inertia = inertia;
        res.iterations = iter + 1;

        // Mean update.
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = static_cast<std::size_t>(res.assignments[i]);
            ++counts[c];
            const double* p = points.row_ptr(i);
            double* s = sums.data() + c * d;
            for (std::size_t j = 0; j < d; ++j) s[j] += p[j];
        }

        Tensor next = res.centroids;
        for (std::size_t c = 0; c < k; ++c)
            if (counts[c] > 0) {
                const double inv = 1.0 / static_cast<double>(counts[c]);
                double* row = next.row_ptr(c);
                const double* s = sums.data() + c * d;
                for (std::size_t j = 0; j < d; ++j) row[j] = s[j] * inv;
            }

        // Empty clusters: reseed each at the point farthest from its current
        // centroid (worst-fit point), ascending cluster index, each point
        // used at most once.
        std::vector<std::size_t> empties;
        for (std::size_t c = 0; c < k; ++c)
            if (counts[c] == 0) empties.push_back(c);
        if (!empties.empty()) {
            std::vector<std::size_t> order(n);
            for (std::size_t i = 0; i < n; ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
                return a.sqdist[x] > a.sqdist[y];
            });
            for (std::size_t e = 0; e < empties.size() && e < n; ++e) {
                const std::size_t p = order[e];
                std::copy(points.row_ptr(p), points.row_ptr(p) + d, next.row_ptr(empties[e]));
                ++res.empty_repairs;
            }
        }

        double max_shift = 0.0;
        for (std::size_t c = 0; c < k; ++c)
            max_shift = std::max(max_shift, sqdist4(next.row_ptr(c), res.centroids.row_ptr(c), d));
        res.centroids = std::move(next);
        if (std::sqrt(max_shift) < cfg.tol) break;
    }

    // Final assignment so the returned pair is a Lloyd fixed point.
    AssignResult a = assign(points, res.centroids);
    double inertia = 0.0;
    for (double v : a.sqdist) inertia += v;
    res.inertia_trace.push_back(inertia);
    res.assignments = std::move(a.assignments);
    res.inertia = inertia;

    std::vector<bool> seen(k, false);
    for (int c : res.assignments) seen[static_cast<std::size_t>(c)] = true;
    for (std::size_t c = 0; c < k; ++c)
        if (!seen[c]) {
            res.warnings.push_back("cluster " + std::to_string(c) +
                                   " is empty at convergence (degenerate data)");
            break;
        }
    return res;
}

} // namespace detail

// Lloyd iteration with the configured init, restarts (best final inertia
// kept, earlier restart wins ties) and deterministic seeding.
inline KmeansResult kmeans_fit(const FeatureSet& fs, const KmeansConfig& cfg) {
    fs.validate();
    const std::size_t n = fs.size();
    if (cfg.k < 1) throw PreconditionError("kmeans: K must be >= 1");
    if (cfg.k > n)
        throw PreconditionError("kmeans: K = " + std::to_string(cfg.k) + " exceeds N = " +
                                std::to_string(n));
    KmeansResult best;
    bool have = false;
    for (std::size_t r = 0; r < std::max<std::size_t>(1, cfg.restarts); ++r) {
        KmeansResult res =
            detail::lloyd(fs.matrix, cfg, stream_seed(cfg.seed, streams::tag(streams::kmeans, r)));
        if (!have || res.inertia < best.inertia) {
            best = std::move(res);
            have = true;
        }
    }
    return best;
}

} // namespace seq
