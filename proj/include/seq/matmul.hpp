#pragma once
#include <cstddef>

#include "seq/parallel.hpp"

namespace seq {

// Dense kernels used by the layers and the quantizer. Every output element
// is reduced in one fixed order (4-way interleaved over the shared
// dimension), so results do not depend on the thread count.

// C(m,n) = A(m,k) * B(k,n), row-major. C must be zeroed by the caller.
// Shared-dimension blocks stay outermost so the four active B rows remain
// cache-hot across the whole row span.
inline void gemm_nn(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n) {
    const std::size_t workers = std::min(threads(), m == 0 ? std::size_t(1) : m);
    const std::size_t chunk = (m + workers - 1) / workers;
    parallel_for(0, workers, [&](std::size_t w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(m, lo + chunk);
        std::size_t p = 0;
        for (; p + 4 <= k; p += 4) {
            const double* b0 = b + p * n;
            const double* b1 = b0 + n;
            const double* b2 = b1 + n;
            const double* b3 = b2 + n;
            for (std::size_t i = lo; i < hi; ++i) {
                const double* ap = a + i * k + p;
                const double a0 = ap[0], a1 = ap[1], a2 = ap[2], a3 = ap[3];
                double* crow = c + i * n;
                for (std::size_t j = 0; j < n; ++j)
                    crow[j] += (a0 * b0[j] + a1 * b1[j]) + (a2 * b2[j] + a3 * b3[j]);
            }
        }
        for (; p < k; ++p) {
            const double* brow = b + p * n;
            for (std::size_t i = lo; i < hi; ++i) {
                const double av = a[i * k + p];
                double* crow = c + i * n;
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    });
}

// Dot of two length-k rows with four independent accumulators (lane order fixed).
inline double dot4(const double* x, const double* y, std::size_t k) {
    double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
        a0 += x[p] * y[p];
        a1 += x[p + 1] * y[p + 1];
        a2 += x[p + 2] * y[p + 2];
        a3 += x[p + 3] * y[p + 3];
    }
    for (; p < k; ++p) a0 += x[p] * y[p];
    return (a0 + a1) + (a2 + a3);
}

// Two dots sharing the x loads; each output keeps dot4's exact lane order.
inline void dot4x2(const double* x, const double* y0, const double* y1, std::size_t k,
                   double& out0, double& out1) {
    double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
    double b0 = 0, b1 = 0, b2 = 0, b3 = 0;
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
        const double x0 = x[p], x1 = x[p + 1], x2 = x[p + 2], x3 = x[p + 3];
        a0 += x0 * y0[p];
        a1 += x1 * y0[p + 1];
        a2 += x2 * y0[p + 2];
        a3 += x3 * y0[p + 3];
        b0 += x0 * y1[p];
        b1 += x1 * y1[p + 1];
        b2 += x2 * y1[p + 2];
        b3 += x3 * y1[p + 3];
    }
    for (; p < k; ++p) {
        a0 += x[p] * y0[p];
        b0 += x[p] * y1[p];
    }
    out0 = (a0 + a1) + (a2 + a3);
    out1 = (b0 + b1) + (b2 + b3);
}

// C(m,n) = A(m,k) * B(n,k)^T: C[i][j] = dot(A row i, B row j). B-row pairs
// stay outermost so they remain cache-hot across the whole row span.
inline void gemm_nt(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n) {
    const std::size_t workers = std::min(threads(), m == 0 ? std::size_t(1) : m);
    const std::size_t chunk = (m + workers - 1) / workers;
    parallel_for(0, workers, [&](std::size_t w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(m, lo + chunk);
        std::size_t j = 0;
        for (; j + 2 <= n; j += 2) {
            const double* br0 = b + j * k;
            const double* br1 = br0 + k;
            for (std::size_t i = lo; i < hi; ++i) {
                double* crow = c + i * n;
                dot4x2(a + i * k, br0, br1, k, crow[j], crow[j + 1]);
            }
        }
        if (j < n)
            for (std::size_t i = lo; i < hi; ++i) c[i * n + j] = dot4(a + i * k, b + j * k, k);
    });
}

// C(m,n) += A(r,m)^T * B(r,n): accumulates rank-1 updates over rows of A and B.
// Parallel split over the m dimension; the r reduction keeps one fixed order.
namespace detail {

inline void tn_acc_span(const double* a, const double* b, double* c,
                        std::size_t r, std::size_t m, std::size_t n,
                        std::size_t lo, std::size_t hi) {
    std::size_t row = 0;
    for (; row + 4 <= r; row += 4) {
        const double* a0 = a + row * m;
        const double* a1 = a0 + m;
        const double* a2 = a1 + m;
        const double* a3 = a2 + m;
        const double* b0 = b + row * n;
        const double* b1 = b0 + n;
        const double* b2 = b1 + n;
        const double* b3 = b2 + n;
        for (std::size_t i = lo; i < hi; ++i) {
            const double v0 = a0[i], v1 = a1[i], v2 = a2[i], v3 = a3[i];
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j)
                crow[j] += (v0 * b0[j] + v1 * b1[j]) + (v2 * b2[j] + v3 * b3[j]);
        }
    }
    for (; row < r; ++row) {
        const double* arow = a + row * m;
        const double* brow = b + row * n;
        for (std::size_t i = lo; i < hi; ++i) {
            const double av = arow[i];
            double* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

} // namespace detail

inline void gemm_tn_acc(const double* a, const double* b, double* c,
                        std::size_t r, std::size_t m, std::size_t n) {
    const std::size_t workers = std::min(threads(), m == 0 ? std::size_t(1) : m);
    if (workers <= 1) {
        detail::tn_acc_span(a, b, c, r, m, n, 0, m);
        return;
    }
    const std::size_t chunk = (m + workers - 1) / workers;
    parallel_for(0, workers, [&](std::size_t w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(m, lo + chunk);
        detail::tn_acc_span(a, b, c, r, m, n, lo, hi);
    });
}

// Squared Euclidean distance with fixed lane order.
inline double sqdist4(const double* x, const double* y, std::size_t k) {
    double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
        const double d0 = x[p] - y[p];
        const double d1 = x[p + 1] - y[p + 1];
        const double d2 = x[p + 2] - y[p + 2];
        const double d3 = x[p + 3] - y[p + 3];
        a0 += d0 * d0;
        a1 += d1 * d1;
        a2 += d2 * d2;
        a3 += d3 * d3;
    }
    for (; p < k; ++p) {
        const double d = x[p] - y[p];
        a0 += d * d;
    }
    return (a0 + a1) + (a2 + a3);
}

} // namespace seq
