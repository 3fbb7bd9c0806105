#pragma once
// Reference implementations used to pin test expectations. Everything here
// is written independently of the library internals (plain loops, no shared
// helpers) so agreement is evidence, not tautology.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

// ---- exhaustive k-means optimum -------------------------------------------
// Global minimum of the k-means objective for tiny instances by enumerating
// every assignment of N points to K cluster ids (empty clusters allowed,
// centroids at the member means). Cost K^N * N * d.
inline double best_inertia(const std::vector<std::vector<double>>& pts, std::size_t k) {
    const std::size_t n = pts.size();
    const std::size_t d = pts.front().size();
    std::vector<std::size_t> assign(n, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        std::vector<std::vector<double>> sum(k, std::vector<double>(d, 0.0));
        std::vector<std::size_t> count(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++count[assign[i]];
            for (std::size_t j = 0; j < d; ++j) sum[assign[i]][j] += pts[i][j];
        }
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = assign[i];
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = pts[i][j] - sum[c][j] / static_cast<double>(count[c]);
                inertia += diff * diff;
            }
        }
        best = std::min(best, inertia);

        std::size_t pos = 0;
        while (pos < n && assign[pos] == k - 1) assign[pos++] = 0;
        if (pos == n) break;
        ++assign[pos];
    }
    return best;
}

// ---- brute-force nearest neighbour -----------------------------------------
// Index of the closest reference row (squared Euclidean, ties -> smallest
// index).
inline std::size_t nearest_index(const std::vector<std::vector<double>>& refs,
                                 const std::vector<double>& q) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < refs.size(); ++i) {
        double dist = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) {
            const double diff = refs[i][j] - q[j];
            dist += diff * diff;
        }
        if (dist < best_d) {
            best_d = dist;
            best = i;
        }
    }
    return best;
}

inline int nn_label(const std::vector<std::vector<double>>& refs, const std::vector<int>& labels,
                    const std::vector<double>& q) {
    return labels[nearest_index(refs, q)];
}

// ---- central finite differences --------------------------------------------
// d loss / d x[i] for every slot of a flat parameter vector.
inline std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f(x);
        x[i] = keep - h;
        const double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

inline double max_relative_error(const std::vector<double>& got, const std::vector<double>& want) {
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double scale = std::max({std::abs(got[i]), std::abs(want[i]), 1e-8});
        worst = std::max(worst, std::abs(got[i] - want[i]) / scale);
    }
    return worst;
}

// ---- best linear separator on a 2-D set -------------------------------------
// Scans direction angles and all thresholds between consecutive projections;
// certifies linear separability independently of any trained model.
inline double best_linear_accuracy(const std::vector<std::vector<double>>& pts,
                                   const std::vector<int>& labels, std::size_t angles = 720) {
    const std::size_t n = pts.size();
    double best = 0.0;
    for (std::size_t a = 0; a < angles; ++a) {
        const double th = M_PI * static_cast<double>(a) / static_cast<double>(angles);
        const double ux = std::cos(th), uy = std::sin(th);
        std::vector<std::pair<double, int>> proj(n);
        for (std::size_t i = 0; i < n; ++i)
            proj[i] = {ux * pts[i][0] + uy * pts[i][1], labels[i]};
        std::sort(proj.begin(), proj.end());
        // prefix of class 0 vs class 1 (and the flipped polarity)
        std::size_t ones_left = 0, ones_total = 0;
        for (const auto& p : proj) ones_total += static_cast<std::size_t>(p.second);
        for (std::size_t cut = 0; cut <= n; ++cut) {
            const std::size_t zeros_left = cut - ones_left;
            const std::size_t correct_a = zeros_left + (ones_total - ones_left);
            const std::size_t correct_b = n - correct_a;
            best = std::max(best, static_cast<double>(std::max(correct_a, correct_b)) /
                                      static_cast<double>(n));
            if (cut < n) ones_left += static_cast<std::size_t>(proj[cut].second);
        }
    }
    return best;
}

// ---- misc -------------------------------------------------------------------
inline double sq_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

} // namespace oracle
