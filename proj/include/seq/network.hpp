#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "seq/errors.hpp"
#include "seq/layers.hpp"
#include "seq/rng.hpp"
#include "seq/tensor.hpp"

namespace seq {

enum class WeightInit { he, xavier };

struct LayerParams {
    Tensor W, b;
};

struct LayerGrads {
    Tensor dW, db;
    bool present = false;
};

struct Gradients {
    std::vector<LayerGrads> layers;
    bool empty() const {
        for (const auto& l : layers)
            if (l.present) return false;
        return true;
    }
};

// Sequential network: ordered layer specs, per-layer parameters and freeze
// flags. Shapes are validated once at build time; forward() re-checks only
// the batch input.
class Network {
public:
    std::vector<LayerSpec> specs;
    std::vector<LayerParams> params;
    std::vector<bool> frozen;
    // Per-layer input shapes (batch dim excluded) plus the final output shape.
    std::vector<std::vector<std::size_t>> io_shapes;

    Network() = default;

    static Network build(std::vector<LayerSpec> layer_specs, std::vector<std::size_t> input_shape,
                         WeightInit init, std::uint64_t seed) {
        Network net;
        net.specs = std::move(layer_specs);
        net.io_shapes.push_back(input_shape);
        std::vector<std::size_t> cur = input_shape;
        for (std::size_t i = 0; i < net.specs.size(); ++i) {
            cur = net.infer_output_shape(i, cur);
            net.io_shapes.push_back(cur);
        }
        net.params.resize(net.specs.size());
        net.frozen.assign(net.specs.size(), false);
        for (std::size_t i = 0; i < net.specs.size(); ++i) net.init_layer(i, init, seed);
        return net;
    }

    std::size_t size() const { return specs.size(); }
    const std::vector<std::size_t>& input_shape() const { return io_shapes.front(); }
    const std::vector<std::size_t>& output_shape() const { return io_shapes.back(); }

    void freeze_all() { frozen.assign(frozen.size(), true); }

    // Runs the batch through every layer. Returns input plus each layer's
    // output: result[i+1] is the output of layer i.
    std::vector<Tensor> forward(const Tensor& batch) const {
        check_batch_shape(batch);
        std::vector<Tensor> acts;
        acts.reserve(specs.size() + 1);
        acts.push_back(batch);
        for (std::size_t i = 0; i < specs.size(); ++i) acts.push_back(apply(i, acts.back()));
        return acts;
    }

    // Back-propagates grad (w.r.t. the output of layer `top-1`, i.e. acts[top])
    // down to the input. Parameter gradients are collected for non-frozen
    // layers only; frozen and parameter-free layers get no entry.
    Gradients backward(const Tensor& grad_out, const std::vector<Tensor>& acts,
                       std::size_t top = SIZE_MAX) const {
        if (top == SIZE_MAX) top = specs.size();
        if (acts.size() != specs.size() + 1)
            throw PreconditionError("backward: activations do not match this network (got " +
                                    std::to_string(acts.size()) + " tensors, expected " +
                                    std::to_string(specs.size() + 1) + ")");
        if (top > specs.size()) throw PreconditionError("backward: top layer index out of range");
        if (grad_out.shape != acts[top].shape)
            throw PreconditionError("backward: gradient shape " + shape_str(grad_out.shape) +
                                    " does not match activation shape " + shape_str(acts[top].shape));
        Gradients grads;
        grads.layers.resize(specs.size());
        Tensor g = grad_out;
        for (std::size_t ii = top; ii-- > 0;) {
            const bool want = specs[ii].has_params() && !frozen[ii];
            ParamGrads pg;
            g = apply_backward(ii, acts[ii], acts[ii + 1], g, want ? &pg : nullptr);
            if (want) {
                grads.layers[ii].dW = std::move(pg.dW);
                grads.layers[ii].db = std::move(pg.db);
                grads.layers[ii].present = true;
            }
        }
        return grads;
    }

    // param <- param - lr * grad for every non-frozen parameterized layer.
    void sgd_step(const Gradients& grads, double lr) {
        if (grads.layers.size() != specs.size())
            throw PreconditionError("sgd_step: gradient set does not match network");
        for (std::size_t i = 0; i < specs.size(); ++i) {
            const auto& g = grads.layers[i];
            if (!g.present) continue;
            if (frozen[i] || !specs[i].has_params())
                throw PreconditionError("sgd_step: gradient present for frozen or parameter-free layer " +
                                        std::to_string(i));
            if (!g.dW.all_finite() || !g.db.all_finite())
                throw NumericError("sgd_step: non-finite gradient at layer " + std::to_string(i) + " (" +
                                   layer_kind_name(specs[i].kind) + "); step aborted");
            auto& p = params[i];
            for (std::size_t j = 0; j < p.W.numel(); ++j) p.W.data[j] -= lr * g.dW.data[j];
            for (std::size_t j = 0; j < p.b.numel(); ++j) p.b.data[j] -= lr * g.db.data[j];
        }
    }

private:
    static std::string shape_err(std::size_t layer, LayerKind kind, const std::string& what) {
        return "layer " + std::to_string(layer) + " (" + layer_kind_name(kind) + "): " + what;
    }

    std::vector<std::size_t> infer_output_shape(std::size_t i, const std::vector<std::size_t>& in) const {
        const LayerSpec& s = specs[i];
        switch (s.kind) {
            case LayerKind::dense:
                if (in.size() != 1 || in[0] != s.in_dim)
                    throw PreconditionError(shape_err(i, s.kind, "expected input shape (" +
                                                                     std::to_string(s.in_dim) + "), got " +
                                                                     shape_str(in)));
                return {s.out_dim};
            case LayerKind::conv2d:
                if (in.size() != 3 || in[0] != s.in_ch)
                    throw PreconditionError(shape_err(i, s.kind, "expected (" + std::to_string(s.in_ch) +
                                                                     ",H,W) input, got " + shape_str(in)));
                return {s.out_ch, in[1], in[2]};
            case LayerKind::convt2d:
                if (in.size() != 3 || in[0] != s.in_ch)
                    throw PreconditionError(shape_err(i, s.kind, "expected (" + std::to_string(s.in_ch) +
                                                                     ",H,W) input, got " + shape_str(in)));
                return {s.out_ch, 2 * in[1], 2 * in[2]};
            case LayerKind::maxpool2x2:
                if (in.size() != 3 || in[1] % 2 != 0 || in[2] % 2 != 0)
                    throw PreconditionError(
                        shape_err(i, s.kind, "expected (C,H,W) with even H,W, got " + shape_str(in)));
                return {in[0], in[1] / 2, in[2] / 2};
            case LayerKind::flatten:
                if (in.size() != 3)
                    throw PreconditionError(shape_err(i, s.kind, "expected (C,H,W), got " + shape_str(in)));
                return {in[0] * in[1] * in[2]};
            case LayerKind::reshape:
                if (in.size() != 1 || in[0] != s.ch * s.h * s.w)
                    throw PreconditionError(shape_err(i, s.kind, "expected (" +
                                                                     std::to_string(s.ch * s.h * s.w) +
                                                                     "), got " + shape_str(in)));
                return {s.ch, s.h, s.w};
            case LayerKind::softmax:
                if (in.size() != 1)
                    throw PreconditionError(shape_err(i, s.kind, "expected flat input, got " + shape_str(in)));
                return in;
            case LayerKind::relu:
            case LayerKind::sigmoid:
                return in;
        }
        throw PreconditionError("unknown layer kind");
    }

    void init_layer(std::size_t i, WeightInit init, std::uint64_t seed) {
        const LayerSpec& s = specs[i];
        if (!s.has_params()) return;
        std::size_t rows = 0, cols = 0, nbias = 0, fan_in = 0, fan_out = 0;
        if (s.kind == LayerKind::dense) {
            rows = s.in_dim;
            cols = s.out_dim;
            nbias = s.out_dim;
            fan_in = s.in_dim;
            fan_out = s.out_dim;
        } else if (s.kind == LayerKind::conv2d) {
            rows = s.out_ch;
            cols = s.in_ch * s.kernel * s.kernel;
            nbias = s.out_ch;
            fan_in = s.in_ch * s.kernel * s.kernel;
            fan_out = s.out_ch * s.kernel * s.kernel;
        } else { // convt2d
            rows = s.in_ch;
            cols = s.out_ch * s.kernel * s.kernel;
            nbias = s.out_ch;
            fan_in = s.in_ch * s.kernel * s.kernel;
            fan_out = s.out_ch * s.kernel * s.kernel;
        }
        const double stdev = init == WeightInit::he ? std::sqrt(2.0 / static_cast<double>(fan_in))
                                                    : std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
        Rng rng(stream_seed(seed, streams::tag(streams::weight_init, i)));
        auto& p = params[i];
        p.W = Tensor({rows, cols});
        for (auto& v : p.W.data) v = stdev * rng.next_normal();
        p.b = Tensor({nbias});
    }

    void check_batch_shape(const Tensor& batch) const {
        const auto& want = io_shapes.front();
        bool ok = batch.ndim() == want.size() + 1 && batch.shape[0] >= 1;
        for (std::size_t d = 0; ok && d < want.size(); ++d) ok = batch.shape[d + 1] == want[d];
        if (!ok)
            throw PreconditionError(shape_err(0, specs.empty() ? LayerKind::dense : specs[0].kind,
                                              "batch shape " + shape_str(batch.shape) +
                                                  " does not match input shape (B," +
                                                  shape_str(want).substr(1)));
    }

    Tensor apply(std::size_t i, const Tensor& x) const {
        const LayerSpec& s = specs[i];
        const auto& p = params[i];
        const std::size_t B = x.shape[0];
        switch (s.kind) {
            case LayerKind::dense: return dense_forward(x, p.W, p.b);
            case LayerKind::conv2d: return conv2d_forward(x, p.W, p.b, s.kernel);
            case LayerKind::convt2d: return convt2d_forward(x, p.W, p.b, s.kernel);
            case LayerKind::relu: return relu_forward(x);
            case LayerKind::sigmoid: return sigmoid_forward(x);
            case LayerKind::softmax: return softmax_forward(x);
            case LayerKind::maxpool2x2: return maxpool_forward(x);
            case LayerKind::flatten: return x.reshaped({B, x.numel() / B});
            case LayerKind::reshape: return x.reshaped({B, s.ch, s.h, s.w});
        }
        throw PreconditionError("unknown layer kind");
    }

    Tensor apply_backward(std::size_t i, const Tensor& x, const Tensor& y, const Tensor& g,
                          ParamGrads* pg) const {
        const LayerSpec& s = specs[i];
        const auto& p = params[i];
        switch (s.kind) {
            case LayerKind::dense: return dense_backward(x, p.W, g, pg);
            case LayerKind::conv2d: return conv2d_backward(x, p.W, g, s.kernel, pg);
            case LayerKind::convt2d: return convt2d_backward(x, p.W, g, s.kernel, pg);
            case LayerKind::relu: return relu_backward(x, g);
            case LayerKind::sigmoid: return sigmoid_backward(y, g);
            case LayerKind::softmax: return softmax_backward(y, g);
            case LayerKind::maxpool2x2: return maxpool_backward(x, g);
            case LayerKind::flatten:
            case LayerKind::reshape: return g.reshaped(x.shape);
        }
        throw PreconditionError("unknown layer kind");
    }
};

} // namespace seq
