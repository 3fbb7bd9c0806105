#pragma once
#include <vector>

#include "seq/errors.hpp"
#include "seq/tensor.hpp"

namespace seq {

// N x d matrix of embedded features with optional aligned labels.
struct FeatureSet {
    Tensor matrix; // (N, d)
    std::vector<int> labels;

    std::size_t size() const { return matrix.rows(); }
    std::size_t dim() const { return matrix.cols(); }
    bool has_labels() const { return !labels.empty(); }
    const double* row(std::size_t i) const { return matrix.row_ptr(i); }

    void validate() const {
        if (matrix.ndim() != 2 || matrix.rows() < 1)
            throw PreconditionError("feature set: need an (N,d) matrix with N >= 1");
        if (!matrix.all_finite()) throw PreconditionError("feature set: non-finite entries");
        if (has_labels() && labels.size() != matrix.rows())
            throw PreconditionError("feature set: label count does not match rows");
    }
};

} // namespace seq
