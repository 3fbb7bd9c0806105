#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "seq/errors.hpp"
#include "seq/matmul.hpp"
#include "seq/parallel.hpp"
#include "seq/tensor.hpp"

namespace seq {

enum class LayerKind { dense, conv2d, convt2d, relu, sigmoid, softmax, maxpool2x2, flatten, reshape };

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::convt2d: return "convt2d";
        case LayerKind::relu: return "relu";
        case LayerKind::sigmoid: return "sigmoid";
        case LayerKind::softmax: return "softmax";
        case LayerKind::maxpool2x2: return "maxpool2x2";
        case LayerKind::flatten: return "flatten";
        case LayerKind::reshape: return "reshape";
    }
    return "?";
}

// One layer of a sequential network. conv2d is kernel 5, stride 1, same
// padding; convt2d is kernel 5, stride 2, pad 2, output padding 1 (doubles
// the spatial size). reshape turns a flat row back into (ch, h, w).
struct LayerSpec {
    LayerKind kind{};
    std::size_t in_dim = 0, out_dim = 0;          // dense
    std::size_t in_ch = 0, out_ch = 0, kernel = 5; // conv2d / convt2d
    std::size_t ch = 0, h = 0, w = 0;              // reshape target

    static LayerSpec dense(std::size_t in, std::size_t out) {
        LayerSpec s;
        s.kind = LayerKind::dense;
        s.in_dim = in;
        s.out_dim = out;
        return s;
    }
    static LayerSpec conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel = 5) {
        LayerSpec s;
        s.kind = LayerKind::conv2d;
        s.in_ch = in_ch;
        s.out_ch = out_ch;
        s.kernel = kernel;
        return s;
    }
    static LayerSpec convt2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel = 5) {
        LayerSpec s;
        s.kind = LayerKind::convt2d;
        s.in_ch = in_ch;
        s.out_ch = out_ch;
        s.kernel = kernel;
        return s;
    }
    static LayerSpec relu() { return LayerSpec{LayerKind::relu}; }
    static LayerSpec sigmoid() { return LayerSpec{LayerKind::sigmoid}; }
    static LayerSpec softmax() { return LayerSpec{LayerKind::softmax}; }
    static LayerSpec maxpool2x2() { return LayerSpec{LayerKind::maxpool2x2}; }
    static LayerSpec flatten() { return LayerSpec{LayerKind::flatten}; }
    static LayerSpec reshape(std::size_t ch, std::size_t h, std::size_t w) {
        LayerSpec s;
        s.kind = LayerKind::reshape;
        s.ch = ch;
        s.h = h;
        s.w = w;
        return s;
    }

    bool has_params() const {
        return kind == LayerKind::dense || kind == LayerKind::conv2d || kind == LayerKind::convt2d;
    }
};

// ---- patch gather/scatter (shared by conv2d and convt2d) ----

// Rows indexed by (b, gy, gx) over a grid_h x grid_w grid; columns by
// (c, ky, kx). Entry = src(b, c, gy*stride+ky-pad, gx*stride+kx-pad), zero
// outside the source.
inline Tensor gather_patches(const Tensor& src, std::size_t grid_h, std::size_t grid_w,
                             std::size_t k, std::size_t stride, std::size_t pad) {
    const std::size_t B = src.shape[0], C = src.shape[1], Hs = src.shape[2], Ws = src.shape[3];
    Tensor out({B * grid_h * grid_w, C * k * k});
    parallel_for(0, B, [&](std::size_t b) {
        const double* sb = src.data.data() + b * C * Hs * Ws;
        for (std::size_t gy = 0; gy < grid_h; ++gy)
            for (std::size_t gx = 0; gx < grid_w; ++gx) {
                double* row = out.row_ptr((b * grid_h + gy) * grid_w + gx);
                std::size_t col = 0;
                for (std::size_t c = 0; c < C; ++c) {
                    const double* sc = sb + c * Hs * Ws;
                    for (std::size_t ky = 0; ky < k; ++ky) {
                        const std::ptrdiff_t sy =
                            static_cast<std::ptrdiff_t>(gy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
                        for (std::size_t kx = 0; kx < k; ++kx, ++col) {
                            const std::ptrdiff_t sx =
                                static_cast<std::ptrdiff_t>(gx * stride + kx) - static_cast<std::ptrdiff_t>(pad);
                            row[col] = (sy >= 0 && sy < static_cast<std::ptrdiff_t>(Hs) && sx >= 0 &&
                                        sx < static_cast<std::ptrdiff_t>(Ws))
                                           ? sc[sy * Ws + sx]
                                           : 0.0;
                        }
                    }
                }
            }
    });
    return out;
}

// Adjoint of gather_patches: accumulates matrix rows back into an image of
// shape (B, C, Hs, Ws). Parallel over b only; per-image writes stay serial.
inline Tensor scatter_patches(const Tensor& mat, std::size_t B, std::size_t C, std::size_t Hs,
                              std::size_t Ws, std::size_t grid_h, std::size_t grid_w,
                              std::size_t k, std::size_t stride, std::size_t pad) {
    Tensor dst({B, C, Hs, Ws});
    parallel_for(0, B, [&](std::size_t b) {
        double* db = dst.data.data() + b * C * Hs * Ws;
        for (std::size_t gy = 0; gy < grid_h; ++gy)
            for (std::size_t gx = 0; gx < grid_w; ++gx) {
                const double* row = mat.row_ptr((b * grid_h + gy) * grid_w + gx);
                std::size_t col = 0;
                for (std::size_t c = 0; c < C; ++c) {
                    double* dc = db + c * Hs * Ws;
                    for (std::size_t ky = 0; ky < k; ++ky) {
                        const std::ptrdiff_t sy =
                            static_cast<std::ptrdiff_t>(gy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
                        for (std::size_t kx = 0; kx < k; ++kx, ++col) {
                            const std::ptrdiff_t sx =
                                static_cast<std::ptrdiff_t>(gx * stride + kx) - static_cast<std::ptrdiff_t>(pad);
                            if (sy >= 0 && sy < static_cast<std::ptrdiff_t>(Hs) && sx >= 0 &&
                                sx < static_cast<std::ptrdiff_t>(Ws))
                                dc[sy * Ws + sx] += row[col];
                        }
                    }
                }
            }
    });
    return dst;
}

// (B,C,H,W) -> matrix with rows (b,y,x) and C columns.
inline Tensor nchw_to_rows(const Tensor& x) {
    const std::size_t B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    Tensor out({B * H * W, C});
    parallel_for(0, B, [&](std::size_t b) {
        const double* xb = x.data.data() + b * C * H * W;
        for (std::size_t c = 0; c < C; ++c) {
            const double* xc = xb + c * H * W;
            double* ob = out.data.data() + b * H * W * C;
            for (std::size_t p = 0; p < H * W; ++p) ob[p * C + c] = xc[p];
        }
    });
    return out;
}

// Rows (b,y,x) with C columns -> (B,C,H,W).
inline Tensor rows_to_nchw(const Tensor& m, std::size_t B, std::size_t C, std::size_t H, std::size_t W) {
    Tensor out({B, C, H, W});
    parallel_for(0, B, [&](std::size_t b) {
        const double* mb = m.data.data() + b * H * W * C;
        double* ob = out.data.data() + b * C * H * W;
        for (std::size_t c = 0; c < C; ++c) {
            double* oc = ob + c * H * W;
            for (std::size_t p = 0; p < H * W; ++p) oc[p] = mb[p * C + c];
        }
    });
    return out;
}

// ---- dense ----

inline Tensor dense_forward(const Tensor& x, const Tensor& W, const Tensor& b) {
    const std::size_t B = x.rows(), in = x.cols(), out = W.cols();
    Tensor y({B, out});
    gemm_nn(x.data.data(), W.data.data(), y.data.data(), B, in, out);
    parallel_for(0, B, [&](std::size_t i) {
        double* row = y.row_ptr(i);
        for (std::size_t j = 0; j < out; ++j) row[j] += b.data[j];
    });
    return y;
}

struct ParamGrads {
    Tensor dW, db;
};

inline Tensor dense_backward(const Tensor& x, const Tensor& W, const Tensor& g, ParamGrads* pg) {
    const std::size_t B = x.rows(), in = x.cols(), out = W.cols();
    if (pg) {
        pg->dW = Tensor({in, out});
        gemm_tn_acc(x.data.data(), g.data.data(), pg->dW.data.data(), B, in, out);
        pg->db = Tensor({out});
        for (std::size_t i = 0; i < B; ++i) {
            const double* row = g.row_ptr(i);
            for (std::size_t j = 0; j < out; ++j) pg->db.data[j] += row[j];
        }
    }
    Tensor gx({B, in});
    gemm_nt(g.data.data(), W.data.data(), gx.data.data(), B, out, in);
    return gx;
}

// ---- conv2d: kernel k, stride 1, same padding. W stored (out_ch, in_ch*k*k). ----

inline Tensor conv2d_forward(const Tensor& x, const Tensor& W, const Tensor& b, std::size_t k) {
    const std::size_t B = x.shape[0], H = x.shape[2], Wd = x.shape[3];
    const std::size_t OC = W.rows();
    const std::size_t pad = (k - 1) / 2;
    const Tensor cols = gather_patches(x, H, Wd, k, 1, pad);
    Tensor ymat({B * H * Wd, OC});
    gemm_nt(cols.data.data(), W.data.data(), ymat.data.data(), cols.rows(), cols.cols(), OC);
    parallel_for(0, ymat.rows(), [&](std::size_t r) {
        double* row = ymat.row_ptr(r);
        for (std::size_t oc = 0; oc < OC; ++oc) row[oc] += b.data[oc];
    });
    return rows_to_nchw(ymat, B, OC, H, Wd);
}

inline Tensor conv2d_backward(const Tensor& x, const Tensor& W, const Tensor& g, std::size_t k,
                              ParamGrads* pg) {
    const std::size_t B = x.shape[0], C = x.shape[1], H = x.shape[2], Wd = x.shape[3];
    const std::size_t OC = W.rows(), patch = W.cols();
    const std::size_t pad = (k - 1) / 2;
    const Tensor gmat = nchw_to_rows(g); // (B*H*W, OC)
    if (pg) {
        const Tensor cols = gather_patches(x, H, Wd, k, 1, pad);
        pg->dW = Tensor({OC, patch});
        gemm_tn_acc(gmat.data.data(), cols.data.data(), pg->dW.data.data(), gmat.rows(), OC, patch);
        pg->db = Tensor({OC});
        for (std::size_t r = 0; r < gmat.rows(); ++r) {
            const double* row = gmat.row_ptr(r);
            for (std::size_t oc = 0; oc < OC; ++oc) pg->db.data[oc] += row[oc];
        }
    }
    Tensor dcols({B * H * Wd, patch});
    gemm_nn(gmat.data.data(), W.data.data(), dcols.data.data(), gmat.rows(), OC, patch);
    return scatter_patches(dcols, B, C, H, Wd, H, Wd, k, 1, pad);
}

// ---- convt2d: kernel k, stride 2, pad 2, output padding 1 — doubles H and W.
//      W stored (in_ch, out_ch*k*k). ----

inline Tensor convt2d_forward(const Tensor& x, const Tensor& W, const Tensor& b, std::size_t k) {
    const std::size_t B = x.shape[0], IC = x.shape[1], H = x.shape[2], Wd = x.shape[3];
    const std::size_t OC = b.numel();
    const std::size_t Ho = 2 * H, Wo = 2 * Wd, pad = 2;
    const Tensor xmat = nchw_to_rows(x); // (B*H*W, IC)
    Tensor prod({B * H * Wd, W.cols()});
    gemm_nn(xmat.data.data(), W.data.data(), prod.data.data(), xmat.rows(), IC, W.cols());
    Tensor y = scatter_patches(prod, B, OC, Ho, Wo, H, Wd, k, 2, pad);
    parallel_for(0, B, [&](std::size_t bi) {
        double* yb = y.data.data() + bi * OC * Ho * Wo;
        for (std::size_t oc = 0; oc < OC; ++oc) {
            double* yc = yb + oc * Ho * Wo;
            for (std::size_t p = 0; p < Ho * Wo; ++p) yc[p] += b.data[oc];
        }
    });
    return y;
}

inline Tensor convt2d_backward(const Tensor& x, const Tensor& W, const Tensor& g, std::size_t k,
                               ParamGrads* pg) {
    const std::size_t B = x.shape[0], IC = x.shape[1], H = x.shape[2], Wd = x.shape[3];
    const std::size_t OC = g.shape[1];
    const Tensor gcols = gather_patches(g, H, Wd, k, 2, 2); // (B*H*W, OC*k*k)
    if (pg) {
        const Tensor xmat = nchw_to_rows(x);
        pg->dW = Tensor({IC, W.cols()});
        gemm_tn_acc(xmat.data.data(), gcols.data.data(), pg->dW.data.data(), xmat.rows(), IC, W.cols());
        pg->db = Tensor({OC});
        const std::size_t Ho = g.shape[2], Wo = g.shape[3];
        for (std::size_t bi = 0; bi < B; ++bi) {
            const double* gb = g.data.data() + bi * OC * Ho * Wo;
            for (std::size_t oc = 0; oc < OC; ++oc) {
                const double* gc = gb + oc * Ho * Wo;
                for (std::size_t p = 0; p < Ho * Wo; ++p) pg->db.data[oc] += gc[p];
            }
        }
    }
    Tensor gxmat({B * H * Wd, IC});
    gemm_nt(gcols.data.data(), W.data.data(), gxmat.data.data(), gcols.rows(), gcols.cols(), IC);
    return rows_to_nchw(gxmat, B, IC, H, Wd);
}

// ---- activations ----

inline Tensor relu_forward(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.data) v = v > 0.0 ? v : 0.0;
    return y;
}

inline Tensor relu_backward(const Tensor& x, const Tensor& g) {
    Tensor gx = g;
    for (std::size_t i = 0; i < gx.numel(); ++i)
        if (x.data[i] <= 0.0) gx.data[i] = 0.0;
    return gx;
}

inline Tensor sigmoid_forward(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.data) v = 1.0 / (1.0 + std::exp(-v));
    return y;
}

inline Tensor sigmoid_backward(const Tensor& y, const Tensor& g) {
    Tensor gx = g;
    for (std::size_t i = 0; i < gx.numel(); ++i) gx.data[i] *= y.data[i] * (1.0 - y.data[i]);
    return gx;
}

// Row-wise softmax, max-shifted.
inline Tensor softmax_forward(const Tensor& x) {
    const std::size_t B = x.rows(), C = x.cols();
    Tensor y({B, C});
    parallel_for(0, B, [&](std::size_t i) {
        const double* xr = x.row_ptr(i);
        double* yr = y.row_ptr(i);
        double m = xr[0];
        for (std::size_t j = 1; j < C; ++j) m = std::max(m, xr[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < C; ++j) {
            yr[j] = std::exp(xr[j] - m);
            sum += yr[j];
        }
        for (std::size_t j = 0; j < C; ++j) yr[j] /= sum;
    });
    return y;
}

inline Tensor softmax_backward(const Tensor& y, const Tensor& g) {
    const std::size_t B = y.rows(), C = y.cols();
    Tensor gx({B, C});
    parallel_for(0, B, [&](std::size_t i) {
        const double* yr = y.row_ptr(i);
        const double* gr = g.row_ptr(i);
        double dot = 0.0;
        for (std::size_t j = 0; j < C; ++j) dot += gr[j] * yr[j];
        double* gxr = gx.row_ptr(i);
        for (std::size_t j = 0; j < C; ++j) gxr[j] = yr[j] * (gr[j] - dot);
    });
    return gx;
}

// ---- 2x2 max pooling, stride 2. Backward routes to the first maximum in
//      row-major window order. ----

inline Tensor maxpool_forward(const Tensor& x) {
    const std::size_t B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const std::size_t Ho = H / 2, Wo = W / 2;
    Tensor y({B, C, Ho, Wo});
    parallel_for(0, B * C, [&](std::size_t bc) {
        const double* xc = x.data.data() + bc * H * W;
        double* yc = y.data.data() + bc * Ho * Wo;
        for (std::size_t oy = 0; oy < Ho; ++oy)
            for (std::size_t ox = 0; ox < Wo; ++ox) {
                const std::size_t base = 2 * oy * W + 2 * ox;
                double m = xc[base];
                m = std::max(m, xc[base + 1]);
                m = std::max(m, xc[base + W]);
                m = std::max(m, xc[base + W + 1]);
                yc[oy * Wo + ox] = m;
            }
    });
    return y;
}

inline Tensor maxpool_backward(const Tensor& x, const Tensor& g) {
    const std::size_t B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const std::size_t Ho = H / 2, Wo = W / 2;
    Tensor gx({B, C, H, W});
    parallel_for(0, B * C, [&](std::size_t bc) {
        const double* xc = x.data.data() + bc * H * W;
        const double* gc = g.data.data() + bc * Ho * Wo;
        double* gxc = gx.data.data() + bc * H * W;
        for (std::size_t oy = 0; oy < Ho; ++oy)
            for (std::size_t ox = 0; ox < Wo; ++ox) {
                const std::size_t base = 2 * oy * W + 2 * ox;
                const std::size_t offs[4] = {base, base + 1, base + W, base + W + 1};
                std::size_t best = offs[0];
                for (int t = 1; t < 4; ++t)
                    if (xc[offs[t]] > xc[best]) best = offs[t];
                gxc[best] += gc[oy * Wo + ox];
            }
    });
    return gx;
}

} // namespace seq
