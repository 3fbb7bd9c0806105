#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seq/errors.hpp"
#include "seq/feature_set.hpp"
#include "seq/kmeans.hpp"
#include "seq/tensor.hpp"

namespace seq {

// K centroids with per-cluster label histograms and majority labels.
struct Codebook {
    Tensor centroids; // (K, d)
    std::vector<int> cluster_labels;
    std::vector<std::vector<std::uint64_t>> histograms; // K x num_classes
    std::size_t num_classes = 0;
    std::vector<std::size_t> repaired_labels; // empty clusters whose label came from a neighbour

    std::size_t k() const { return centroids.rows(); }
    std::size_t dim() const { return centroids.cols(); }
};

struct ClusterLabeling {
    std::vector<int> cluster_labels; // -1 for empty clusters
    std::vector<std::vector<std::uint64_t>> histograms;
};

// Majority vote per cluster; ties and empties resolve deterministically
// (smallest class index; empty -> -1 for the caller to repair).
inline ClusterLabeling label_clusters(const std::vector<int>& assignments, const std::vector<int>& labels,
                                      std::size_t k, std::size_t num_classes) {
    if (assignments.size() != labels.size())
        throw PreconditionError("label_clusters: assignment/label count mismatch");
    if (labels.empty()) throw PreconditionError("label_clusters: labels required");
    ClusterLabeling out;
    out.histograms.assign(k, std::vector<std::uint64_t>(num_classes, 0));
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        const int c = assignments[i];
        const int y = labels[i];
        if (c < 0 || static_cast<std::size_t>(c) >= k)
            throw PreconditionError("label_clusters: assignment out of range");
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
            throw PreconditionError("label_clusters: label out of range");
        ++out.histograms[static_cast<std::size_t>(c)][static_cast<std::size_t>(y)];
    }
    out.cluster_labels.assign(k, -1);
    for (std::size_t c = 0; c < k; ++c) {
        std::uint64_t best = 0;
        int best_class = -1;
        for (std::size_t y = 0; y < num_classes; ++y)
            if (out.histograms[c][y] > best) {
                best = out.histograms[c][y];
                best_class = static_cast<int>(y);
            }
        out.cluster_labels[c] = best_class;
    }
    return out;
}

// Full codebook: empty clusters inherit the majority label of the nearest
// non-empty centroid and are flagged in repaired_labels.
inline Codebook build_codebook(const Tensor& centroids, const std::vector<int>& assignments,
                               const std::vector<int>& labels, std::size_t num_classes) {
    const std::size_t k = centroids.rows(), d = centroids.cols();
    ClusterLabeling lab = label_clusters(assignments, labels, k, num_classes);
    Codebook cb;
    cb.centroids = centroids;
    cb.histograms = std::move(lab.histograms);
    cb.cluster_labels = std::move(lab.cluster_labels);
    cb.num_classes = num_classes;
    for (std::size_t c = 0; c < k; ++c) {
        if (cb.cluster_labels[c] != -1) continue;
        double best_d = 0.0;
        std::size_t best = k;
        for (std::size_t o = 0; o < k; ++o) {
            if (cb.cluster_labels[o] == -1) continue;
            const double dist = sqdist4(centroids.row_ptr(c), centroids.row_ptr(o), d);
            if (best == k || dist < best_d) {
                best_d = dist;
                best = o;
            }
        }
        if (best == k) throw PreconditionError("build_codebook: every cluster is empty");
        cb.cluster_labels[c] = cb.cluster_labels[best];
        cb.repaired_labels.push_back(c);
    }
    return cb;
}

inline Codebook build_codebook(const KmeansResult& fit, const std::vector<int>& labels,
                               std::size_t num_classes) {
    return build_codebook(fit.centroids, fit.assignments, labels, num_classes);
}

struct Classified {
    std::size_t cluster = 0;
    int label = -1;
};

// Nearest centroid (ties to the smallest index) and its majority label.
inline Classified classify(const double* x, std::size_t d, const Codebook& cb) {
    if (d != cb.dim()) throw PreconditionError("classify: dimension mismatch");
    std::size_t best = 0;
    double best_d = sqdist4(x, cb.centroids.row_ptr(0), d);
    for (std::size_t c = 1; c < cb.k(); ++c) {
        const double dist = sqdist4(x, cb.centroids.row_ptr(c), d);
        if (dist < best_d) {
            best_d = dist;
            best = c;
        }
    }
    return {best, cb.cluster_labels[best]};
}

inline Classified classify(const Tensor& row, const Codebook& cb) {
    return classify(row.data.data(), row.numel(), cb);
}

inline std::vector<int> classify_all(const FeatureSet& fs, const Codebook& cb) {
    const AssignResult a = assign(fs, cb.centroids);
    std::vector<int> out(fs.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = cb.cluster_labels[static_cast<std::size_t>(a.assignments[i])];
    return out;
}

// Fraction of samples whose assigned cluster's majority label matches their
// true label.
inline double clustering_accuracy(const Codebook& cb, const FeatureSet& fs) {
    if (!fs.has_labels()) throw PreconditionError("clustering_accuracy: labels required");
    const std::vector<int> pred = classify_all(fs, cb);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == fs.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(pred.size());
}

struct KSweepRecord {
    std::size_t k = 0;
    double quantizer_accuracy = 0.0; // majority-vote accuracy on the fitted set
    double inertia = 0.0;
    std::uint64_t seed = 0;
};

struct SelectKResult {
    std::optional<std::size_t> k;
    std::vector<KSweepRecord> records;
};

// Smallest K in the ascending grid with quantizer accuracy > reference - epsilon.
// One fresh fit per K, all sharing cfg.seed. Scans in order and stops at the
// first qualifying K; returns the full per-K report when none qualifies.
inline SelectKResult select_k(const FeatureSet& fs, double encoder_accuracy, double epsilon,
                              const std::vector<std::size_t>& k_grid, const KmeansConfig& base_cfg) {
    if (k_grid.empty()) throw PreconditionError("select_k: empty K grid");
    for (std::size_t i = 1; i < k_grid.size(); ++i)
        if (k_grid[i] <= k_grid[i - 1]) throw PreconditionError("select_k: K grid must be strictly ascending");
    if (epsilon < 0.0 || epsilon > 1.0) throw PreconditionError("select_k: epsilon must be in [0,1]");
    if (!fs.has_labels()) throw PreconditionError("select_k: labels required");

    SelectKResult out;
    std::size_t num_classes = 0;
    for (int y : fs.labels) num_classes = std::max(num_classes, static_cast<std::size_t>(y) + 1);
    for (const std::size_t k : k_grid) {
        KmeansConfig cfg = base_cfg;
        cfg.k = k;
        const KmeansResult fit = kmeans_fit(fs, cfg);
        const Codebook cb = build_codebook(fit, fs.labels, num_classes);
        const double acc = clustering_accuracy(cb, fs);
        out.records.push_back({k, acc, fit.inertia, cfg.seed});
        if (acc > encoder_accuracy - epsilon) {
            out.k = k;
            break;
        }
    }
    return out;
}

} // namespace seq
