#pragma once
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "seq/dataset.hpp"
#include "seq/errors.hpp"
#include "seq/feature_set.hpp"
#include "seq/loss.hpp"
#include "seq/network.hpp"

namespace seq {

constexpr std::size_t kEmbedDim = 128;
constexpr std::size_t kNumClasses = 10;

enum class Arch { lae2, lae4, cae4 };

inline const char* arch_name(Arch a) {
    switch (a) {
        case Arch::lae2: return "lae2";
        case Arch::lae4: return "lae4";
        case Arch::cae4: return "cae4";
    }
    return "?";
}

inline Arch arch_from_name(const std::string& s) {
    if (s == "lae2") return Arch::lae2;
    if (s == "lae4") return Arch::lae4;
    if (s == "cae4") return Arch::cae4;
    throw ConfigError("unknown architecture '" + s + "' (expected lae2, lae4 or cae4)");
}

inline Layout arch_layout(Arch a) { return a == Arch::cae4 ? Layout::chw : Layout::flat; }

inline std::vector<std::size_t> encoder_input_shape(Arch a) {
    return a == Arch::cae4 ? std::vector<std::size_t>{1, 28, 28} : std::vector<std::size_t>{784};
}

// Hidden stacks end in the 128-wide embedding layer; ReLU after every hidden
// dense/conv layer, 2x2 max-pool after each conv block.
inline std::vector<LayerSpec> encoder_specs(Arch a) {
    switch (a) {
        case Arch::lae2:
            return {LayerSpec::dense(784, 1024), LayerSpec::relu(),
                    LayerSpec::dense(1024, kEmbedDim), LayerSpec::relu()};
        case Arch::lae4:
            return {LayerSpec::dense(784, 1024), LayerSpec::relu(),
                    LayerSpec::dense(1024, 512),  LayerSpec::relu(),
                    LayerSpec::dense(512, 256),   LayerSpec::relu(),
                    LayerSpec::dense(256, kEmbedDim), LayerSpec::relu()};
        case Arch::cae4:
            return {LayerSpec::conv2d(1, 32),  LayerSpec::relu(), LayerSpec::maxpool2x2(),
                    LayerSpec::conv2d(32, 64), LayerSpec::relu(), LayerSpec::maxpool2x2(),
                    LayerSpec::flatten(),
                    LayerSpec::dense(64 * 7 * 7, 1024), LayerSpec::relu(),
                    LayerSpec::dense(1024, kEmbedDim),  LayerSpec::relu()};
    }
    throw ConfigError("unknown architecture");
}

// Pretraining network: encoder plus a dense(128,10) + softmax head.
inline std::vector<LayerSpec> pretrain_specs(Arch a) {
    std::vector<LayerSpec> specs = encoder_specs(a);
    specs.push_back(LayerSpec::dense(kEmbedDim, kNumClasses));
    specs.push_back(LayerSpec::softmax());
    return specs;
}

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 64;
    std::size_t epochs = 20;
    std::uint64_t seed = 1;
    WeightInit weight_init = WeightInit::he;
    bool verbose = false;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    }
};

struct EncoderModel {
    Arch arch = Arch::lae2;
    Network net;
    bool trained = false;
};

struct EncoderTrainResult {
    EncoderModel model;
    double test_accuracy = 0.0; // accuracy of the pretrained classification head
    std::vector<double> epoch_losses;
};

namespace detail {

// Argmax-of-logits accuracy over a dataset, evaluated in chunks.
inline double head_accuracy(const Network& net, const LabeledDataset& ds, std::size_t logits_layer) {
    const std::size_t chunk = 512;
    std::size_t correct = 0;
    for (std::size_t lo = 0; lo < ds.size(); lo += chunk) {
        const std::size_t hi = std::min(ds.size(), lo + chunk);
        std::vector<std::size_t> shape = ds.features.shape;
        shape[0] = hi - lo;
        Tensor x(shape);
        const std::size_t sample = ds.sample_numel();
        std::copy(ds.features.data.begin() + static_cast<std::ptrdiff_t>(lo * sample),
                  ds.features.data.begin() + static_cast<std::ptrdiff_t>(hi * sample), x.data.begin());
        const auto acts = net.forward(x);
        const Tensor& logits = acts[logits_layer];
        for (std::size_t r = 0; r < hi - lo; ++r) {
            const double* row = logits.row_ptr(r);
            std::size_t best = 0;
            for (std::size_t c = 1; c < logits.cols(); ++c)
                if (row[c] > row[best]) best = c;
            if (static_cast<int>(best) == ds.labels[lo + r]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

} // namespace detail

// Supervised pretraining: softmax head + cross-entropy + SGD, then the head
// is dropped and the dense(128) embedding output is kept. Returns the
// encoder and the head's accuracy on the held-out test split.
inline EncoderTrainResult train_encoder(const LabeledDataset& train, const LabeledDataset& test,
                                        Arch arch, const TrainConfig& cfg) {
    cfg.validate();
    if (train.size() == 0) throw PreconditionError("train_encoder: empty dataset");
    for (int y : train.labels)
        if (y < 0 || y >= static_cast<int>(kNumClasses))
            throw PreconditionError("train_encoder: label " + std::to_string(y) + " out of range");

    Network net = Network::build(pretrain_specs(arch), encoder_input_shape(arch), cfg.weight_init,
                                 cfg.seed);
    const std::size_t L = net.size();
    const std::size_t logits_layer = L - 1; // activation index of the head's logits

    EncoderTrainResult result;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        BatchStream stream(train, cfg.batch_size, cfg.seed, epoch);
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < stream.batch_count(); ++b) {
            const Batch batch = stream.get(b);
            const auto acts = net.forward(batch.x);
            const LogitLoss ll = softmax_cross_entropy_from_logits(acts[logits_layer], batch.labels);
            if (!std::isfinite(ll.loss))
                throw NumericError("train_encoder: loss diverged at epoch " + std::to_string(epoch + 1) +
                                   ", batch " + std::to_string(b) + "; last good checkpoint: end of epoch " +
                                   std::to_string(epoch));
            epoch_loss += ll.loss;
            // Gradient enters below the softmax layer, w.r.t. the logits.
            const Gradients grads = net.backward(ll.dlogits, acts, logits_layer);
            try {
                net.sgd_step(grads, cfg.learning_rate);
            } catch (const NumericError& e) {
                throw NumericError("train_encoder: diverged at epoch " + std::to_string(epoch + 1) +
                                   ", batch " + std::to_string(b) + " (" + e.what() +
                                   "); last good checkpoint: end of epoch " + std::to_string(epoch));
            }
        }
        epoch_loss /= static_cast<double>(stream.batch_count());
        result.epoch_losses.push_back(epoch_loss);
        if (cfg.verbose) {
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::fprintf(stderr, "epoch %zu/%zu  loss %.4f  (%.1fs)\n", epoch + 1, cfg.epochs,
                         epoch_loss, secs);
        }
    }

    result.test_accuracy = test.size() ? detail::head_accuracy(net, test, logits_layer) : 0.0;

    // Drop the dense head + softmax, keep the trained encoder stack.
    Network enc;
    enc.specs.assign(net.specs.begin(), net.specs.end() - 2);
    enc.params.assign(net.params.begin(), net.params.end() - 2);
    enc.frozen.assign(enc.specs.size(), false);
    enc.io_shapes.assign(net.io_shapes.begin(), net.io_shapes.end() - 2);
    result.model = EncoderModel{arch, std::move(enc), true};
    return result;
}

// Maps samples to embedding rows. Labels, when present, are carried through.
inline FeatureSet encode(const EncoderModel& enc, const Tensor& data, std::vector<int> labels = {}) {
    if (!enc.trained) throw PreconditionError("encode: encoder is not trained");
    const std::size_t n = data.shape[0];
    FeatureSet fs;
    fs.matrix = Tensor({n, kEmbedDim});
    fs.labels = std::move(labels);
    const std::size_t chunk = 512;
    const std::size_t sample = data.numel() / n;
    for (std::size_t lo = 0; lo < n; lo += chunk) {
        const std::size_t hi = std::min(n, lo + chunk);
        std::vector<std::size_t> shape = data.shape;
        shape[0] = hi - lo;
        Tensor x(shape);
        std::copy(data.data.begin() + static_cast<std::ptrdiff_t>(lo * sample),
                  data.data.begin() + static_cast<std::ptrdiff_t>(hi * sample), x.data.begin());
        const auto acts = enc.net.forward(x);
        const Tensor& z = acts.back();
        std::copy(z.data.begin(), z.data.end(),
                  fs.matrix.data.begin() + static_cast<std::ptrdiff_t>(lo * kEmbedDim));
    }
    return fs;
}

inline FeatureSet encode(const EncoderModel& enc, const LabeledDataset& ds) {
    return encode(enc, ds.features, ds.labels);
}

} // namespace seq
