#pragma once
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "seq/errors.hpp"
#include "seq/tensor.hpp"

namespace seq {

// Mean negative log-probability of the true labels. Rows must already be
// probability vectors; a zero probability is clamped at 1e-12 so the loss
// stays finite.
inline double cross_entropy(const Tensor& probs, const std::vector<int>& labels) {
    constexpr double kEps = 1e-12;
    const std::size_t B = probs.rows(), C = probs.cols();
    if (labels.size() != B)
        throw PreconditionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(B) + " rows");
    double loss = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
        const double* row = probs.row_ptr(i);
        double sum = 0.0;
        for (std::size_t j = 0; j < C; ++j) sum += row[j];
        if (std::abs(sum - 1.0) > 1e-9)
            throw PreconditionError("cross_entropy: row " + std::to_string(i) +
                                    " is not a probability vector (sum " + std::to_string(sum) + ")");
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= C)
            throw PreconditionError("cross_entropy: label " + std::to_string(y) + " out of range");
        loss -= std::log(std::max(row[y], kEps));
    }
    return loss / static_cast<double>(B);
}

inline double mse(const Tensor& x, const Tensor& x_hat) {
    if (!x.same_shape(x_hat))
        throw PreconditionError("mse: shape mismatch " + shape_str(x.shape) + " vs " +
                                shape_str(x_hat.shape));
    double s = 0.0;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double d = x_hat.data[i] - x.data[i];
        s += d * d;
    }
    return s / static_cast<double>(x.numel());
}

// d(mse)/d(x_hat).
inline Tensor mse_grad(const Tensor& x, const Tensor& x_hat) {
    if (!x.same_shape(x_hat))
        throw PreconditionError("mse_grad: shape mismatch");
    Tensor g = x_hat;
    const double scale = 2.0 / static_cast<double>(x.numel());
    for (std::size_t i = 0; i < g.numel(); ++i) g.data[i] = scale * (x_hat.data[i] - x.data[i]);
    return g;
}

struct LogitLoss {
    double loss;
    Tensor dlogits;
};

// Softmax + cross-entropy fused in the log domain (log-sum-exp), with the
// exact gradient (softmax - onehot) / B w.r.t. the logits.
inline LogitLoss softmax_cross_entropy_from_logits(const Tensor& logits, const std::vector<int>& labels) {
    const std::size_t B = logits.rows(), C = logits.cols();
    if (labels.size() != B)
        throw PreconditionError("softmax_cross_entropy: label count mismatch");
    LogitLoss out{0.0, Tensor({B, C})};
    const double invB = 1.0 / static_cast<double>(B);
    for (std::size_t i = 0; i < B; ++i) {
        const double* z = logits.row_ptr(i);
        double* d = out.dlogits.row_ptr(i);
        double m = z[0];
        for (std::size_t j = 1; j < C; ++j) m = std::max(m, z[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < C; ++j) sum += std::exp(z[j] - m);
        const double lse = m + std::log(sum);
        out.loss += (lse - z[labels[i]]) * invB;
        for (std::size_t j = 0; j < C; ++j) d[j] = std::exp(z[j] - lse) * invB;
        d[labels[i]] -= invB;
    }
    return out;
}

} // namespace seq
