#pragma once
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "seq/codebook.hpp"
#include "seq/decoder.hpp"
#include "seq/errors.hpp"
#include "seq/feature_set.hpp"

namespace seq {

// Three source features blended with weights (a1, a2, 1-a1-a2).
struct StyleMix {
    Tensor features; // (3, d)
    double alpha1 = 1.0 / 3.0;
    double alpha2 = 1.0 / 3.0;

    double alpha3() const { return 1.0 - alpha1 - alpha2; }

    // General simplex membership: weights non-negative, summing to one.
    void validate() const {
        if (features.ndim() != 2 || features.rows() != 3)
            throw PreconditionError("StyleMix: expected exactly 3 feature rows");
        constexpr double eps = 1e-12;
        if (alpha1 < -eps || alpha2 < -eps || alpha3() < -eps)
            throw PreconditionError("StyleMix: alphas out of simplex");
    }

    // The stricter range used by interpolation grids.
    bool in_grid_range() const { return alpha1 > 0.0 && alpha1 < 0.5 && alpha2 > 0.0 && alpha2 < 0.5; }
};

inline Tensor convex_combine(const StyleMix& mix) {
    mix.validate();
    const std::size_t d = mix.features.cols();
    const double a3 = mix.alpha3();
    Tensor out({d});
    const double* x1 = mix.features.row_ptr(0);
    const double* x2 = mix.features.row_ptr(1);
    const double* x3 = mix.features.row_ptr(2);
    for (std::size_t j = 0; j < d; ++j)
        out.data[j] = mix.alpha1 * x1[j] + mix.alpha2 * x2[j] + a3 * x3[j];
    return out;
}

struct GridCell {
    Tensor image;         // 28x28, values in [0,1]
    bool annotated = false; // source image, framed on export
    int label = -1;         // class tag; -1 for unlabeled/padding cells
};

struct ImageGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<GridCell> cells; // row-major, rows*cols entries
    std::vector<std::string> notes;

    GridCell& at(std::size_t r, std::size_t c) { return cells[r * cols + c]; }
    const GridCell& at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
    std::size_t filled() const {
        std::size_t n = 0;
        for (const auto& cell : cells)
            if (cell.label != -1 || cell.annotated) ++n;
        return n;
    }
};

inline ImageGrid make_blank_grid(std::size_t rows, std::size_t cols) {
    ImageGrid g;
    g.rows = rows;
    g.cols = cols;
    g.cells.resize(rows * cols);
    for (auto& cell : g.cells) cell.image = Tensor({28, 28});
    return g;
}

// One decoded image per non-empty cluster, from the mean of the member
// features (not the stored centroid; at a Lloyd fixed point the two agree).
// Cells are ordered by (cluster label, cluster index) into a near-square
// grid; trailing cells of the last row stay blank with label -1.
inline ImageGrid cluster_mean_images(const Codebook& cb, const FeatureSet& fs,
                                     const DecoderModel& dec) {
    fs.validate();
    const std::size_t k = cb.centroids.rows();
    const std::size_t d = cb.centroids.cols();
    if (fs.matrix.cols() != d) throw PreconditionError("cluster_mean_images: feature dim mismatch");

    const AssignResult ar = assign(fs.matrix, cb.centroids);
    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < fs.matrix.rows(); ++i) {
        const std::size_t c = ar.assignments[i];
        const double* row = fs.matrix.row_ptr(i);
        for (std::size_t j = 0; j < d; ++j) sums[c][j] += row[j];
        ++counts[c];
    }

    std::vector<std::size_t> order;
    ImageGrid g;
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) {
            g.notes.push_back("cluster " + std::to_string(c) + " has no members; skipped");
            continue;
        }
        order.push_back(c);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (cb.cluster_labels[a] != cb.cluster_labels[b])
            return cb.cluster_labels[a] < cb.cluster_labels[b];
        return a < b;
    });

    const std::size_t n = order.size();
    const std::size_t cols = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                          std::ceil(std::sqrt(static_cast<double>(n)))));
    const std::size_t rows = (n + cols - 1) / cols;
    const auto notes = std::move(g.notes);
    g = make_blank_grid(std::max<std::size_t>(rows, 1), cols);
    g.notes = notes;

    Tensor means({n, d});
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = order[i];
        for (std::size_t j = 0; j < d; ++j)
            means(i, j) = sums[c][j] / static_cast<double>(counts[c]);
    }
    const std::vector<Tensor> imgs = decode_rows(dec, means);
    for (std::size_t i = 0; i < n; ++i) {
        GridCell& cell = g.cells[i];
        cell.image = imgs[i];
        cell.label = cb.cluster_labels[order[i]];
    }
    return g;
}

enum class GridMode { intra_cluster, inter_cluster };

// Blend grid over three source features. Sources decode into the top-left,
// top-right and bottom-right corners (annotated); every other cell holds the
// decode of a convex combination with alpha1 increasing left to right and
// alpha2 top to bottom, both sweeping the open interval (0, 0.5):
//   alpha1 = 0.5*(c+1)/(G+1),  alpha2 = 0.5*(r+1)/(G+1),  G = steps+1.
inline ImageGrid interpolation_grid(const Codebook& cb, const FeatureSet& fs,
                                    const DecoderModel& dec, GridMode mode,
                                    const std::vector<std::size_t>& sample_indices,
                                    std::size_t steps) {
    fs.validate();
    if (sample_indices.size() != 3)
        throw PreconditionError("interpolation_grid: exactly 3 sample indices required");
    if (steps < 1) throw PreconditionError("interpolation_grid: steps must be >= 1");
    const std::size_t d = fs.matrix.cols();
    if (cb.centroids.cols() != d) throw PreconditionError("interpolation_grid: feature dim mismatch");

    Tensor sources({3, d});
    std::vector<std::size_t> clusters(3);
    for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t idx = sample_indices[i];
        if (idx >= fs.matrix.rows())
            throw PreconditionError("interpolation_grid: sample index " + std::to_string(idx) +
                                    " out of range");
        const double* row = fs.matrix.row_ptr(idx);
        std::copy(row, row + d, sources.row_ptr(i));
        clusters[i] = classify(row, d, cb).cluster;
    }

    if (mode == GridMode::intra_cluster) {
        if (clusters[0] != clusters[1] || clusters[1] != clusters[2])
            throw PreconditionError("interpolation_grid: intra-cluster mode requires all samples in one cluster");
    } else {
        if (clusters[0] == clusters[1] || clusters[1] == clusters[2] || clusters[0] == clusters[2])
            throw PreconditionError("interpolation_grid: inter-cluster mode requires distinct clusters");
        const int l0 = cb.cluster_labels[clusters[0]];
        if (cb.cluster_labels[clusters[1]] != l0 || cb.cluster_labels[clusters[2]] != l0)
            throw PreconditionError("interpolation_grid: inter-cluster mode requires clusters sharing a label");
    }

    const std::size_t g = steps + 1;
    ImageGrid grid = make_blank_grid(g, g);
    const int shared_label = cb.cluster_labels[clusters[0]];

    // Interior blend rows batched through the decoder.
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    for (std::size_t r = 0; r < g; ++r)
        for (std::size_t c = 0; c < g; ++c) {
            const bool corner = (r == 0 && c == 0) || (r == 0 && c == g - 1) || (r == g - 1 && c == g - 1);
            if (!corner) slots.emplace_back(r, c);
        }
    Tensor blends({slots.size(), d});
    for (std::size_t i = 0; i < slots.size(); ++i) {
        StyleMix mix;
        mix.features = sources;
        mix.alpha1 = 0.5 * static_cast<double>(slots[i].second + 1) / static_cast<double>(g + 1);
        mix.alpha2 = 0.5 * static_cast<double>(slots[i].first + 1) / static_cast<double>(g + 1);
        const Tensor z = convex_combine(mix);
        std::copy(z.data.begin(), z.data.end(), blends.row_ptr(i));
    }
    const std::vector<Tensor> interior = decode_rows(dec, blends);
    for (std::size_t i = 0; i < slots.size(); ++i) {
        GridCell& cell = grid.at(slots[i].first, slots[i].second);
        cell.image = interior[i];
        cell.label = shared_label;
    }

    const std::vector<Tensor> corner_imgs = decode_rows(dec, sources);
    const std::size_t corner_pos[3][2] = {{0, 0}, {0, g - 1}, {g - 1, g - 1}};
    for (std::size_t i = 0; i < 3; ++i) {
        GridCell& cell = grid.at(corner_pos[i][0], corner_pos[i][1]);
        cell.image = corner_imgs[i];
        cell.annotated = true;
        cell.label = shared_label;
    }
    return grid;
}

// Fraction of non-corner cells whose decoded image, re-encoded and classified
// through the codebook, recovers the expected label.
inline double grid_roundtrip_agreement(const ImageGrid& grid, const EncoderModel& enc,
                                       const Codebook& cb, int expected_label) {
    std::size_t total = 0, hits = 0;
    for (const auto& cell : grid.cells) {
        if (cell.annotated || cell.label == -1) continue;
        ++total;
        LabeledDataset one;
        const auto shape = encoder_input_shape(enc.arch);
        std::vector<std::size_t> full = {1};
        full.insert(full.end(), shape.begin(), shape.end());
        one.features = cell.image.reshaped(full);
        one.labels = {0};
        const FeatureSet z = encode(enc, one);
        if (classify(z.matrix.row_ptr(0), z.matrix.cols(), cb).label == expected_label) ++hits;
    }
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

} // namespace seq
