#pragma once
#include <chrono>
#include <cstdio>
#include <vector>

#include "seq/dataset.hpp"
#include "seq/encoder.hpp"
#include "seq/errors.hpp"
#include "seq/feature_set.hpp"
#include "seq/loss.hpp"
#include "seq/network.hpp"

namespace seq {

struct DecoderModel {
    Arch arch = Arch::lae2;
    Network net;
    bool trained = false;
};

// Decoder layer stack mirroring the encoder, sigmoid output in [0,1].
// The convolutional mirror unflattens to 64x7x7 and upsamples with two
// stride-2 transposed convolutions.
inline std::vector<LayerSpec> mirror_decoder_specs(Arch a) {
    switch (a) {
        case Arch::lae2:
            return {LayerSpec::dense(kEmbedDim, 1024), LayerSpec::relu(),
                    LayerSpec::dense(1024, 784), LayerSpec::sigmoid()};
        case Arch::lae4:
            return {LayerSpec::dense(kEmbedDim, 256), LayerSpec::relu(),
                    LayerSpec::dense(256, 512),  LayerSpec::relu(),
                    LayerSpec::dense(512, 1024), LayerSpec::relu(),
                    LayerSpec::dense(1024, 784), LayerSpec::sigmoid()};
        case Arch::cae4:
            return {LayerSpec::dense(kEmbedDim, 1024), LayerSpec::relu(),
                    LayerSpec::dense(1024, 64 * 7 * 7), LayerSpec::relu(),
                    LayerSpec::reshape(64, 7, 7),
                    LayerSpec::convt2d(64, 32), LayerSpec::relu(),
                    LayerSpec::convt2d(32, 1),  LayerSpec::sigmoid()};
    }
    throw ConfigError("unknown architecture");
}

inline DecoderModel make_decoder(Arch a, WeightInit init, std::uint64_t seed) {
    DecoderModel dec;
    dec.arch = a;
    dec.net = Network::build(mirror_decoder_specs(a), {kEmbedDim}, init, seed);
    return dec;
}

struct DecoderTrainResult {
    double final_train_mse = 0.0;
    std::vector<double> epoch_losses;
};

// SGD on the reconstruction MSE, decoder parameters only: the encoder is
// run forward with no gradient path, so its parameters stay bit-identical.
inline DecoderTrainResult train_decoder(const EncoderModel& enc, DecoderModel& dec,
                                        const LabeledDataset& data, const TrainConfig& cfg) {
    cfg.validate();
    if (!enc.trained) throw PreconditionError("train_decoder: encoder is not trained");
    if (enc.arch != dec.arch) throw PreconditionError("train_decoder: encoder/decoder arch mismatch");
    if (data.size() == 0) throw PreconditionError("train_decoder: empty dataset");

    // Targets are the flat pixels; the cae4 decoder emits (1,28,28) and is
    // compared against the same pixels reshaped.
    const FeatureSet z = encode(enc, data);
    LabeledDataset pairs;
    pairs.features = z.matrix;
    pairs.labels.assign(data.size(), 0);

    DecoderTrainResult result;
    const std::size_t sample = data.sample_numel();
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        BatchStream stream(pairs, cfg.batch_size, cfg.seed, epoch);
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < stream.batch_count(); ++b) {
            const Batch batch = stream.get(b);
            std::vector<std::size_t> tshape = dec.net.output_shape();
            tshape.insert(tshape.begin(), batch.indices.size());
            Tensor target(tshape);
            for (std::size_t r = 0; r < batch.indices.size(); ++r) {
                const double* src = data.features.data.data() + batch.indices[r] * sample;
                std::copy(src, src + sample, target.data.data() + r * sample);
            }
            const auto acts = dec.net.forward(batch.x);
            const double loss = mse(target, acts.back());
            if (!std::isfinite(loss))
                throw NumericError("train_decoder: loss diverged at epoch " + std::to_string(epoch + 1) +
                                   ", batch " + std::to_string(b));
            epoch_loss += loss;
            const Gradients grads = dec.net.backward(mse_grad(target, acts.back()), acts);
            try {
                dec.net.sgd_step(grads, cfg.learning_rate);
            } catch (const NumericError& e) {
                throw NumericError("train_decoder: diverged at epoch " + std::to_string(epoch + 1) +
                                   ", batch " + std::to_string(b) + " (" + e.what() + ")");
            }
        }
        epoch_loss /= static_cast<double>(stream.batch_count());
        result.epoch_losses.push_back(epoch_loss);
        result.final_train_mse = epoch_loss;
        if (cfg.verbose) {
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::fprintf(stderr, "decoder epoch %zu/%zu  mse %.5f  (%.1fs)\n", epoch + 1, cfg.epochs,
                         epoch_loss, secs);
        }
    }
    dec.trained = true;
    return result;
}

// Decodes one embedding row into a 28x28 image in [0,1].
inline Tensor decode(const DecoderModel& dec, const double* z, std::size_t d) {
    if (d != kEmbedDim) throw PreconditionError("decode: feature dimension must be 128");
    Tensor x({1, kEmbedDim});
    std::copy(z, z + d, x.data.begin());
    const auto acts = dec.net.forward(x);
    return acts.back().reshaped({28, 28});
}

inline Tensor decode(const DecoderModel& dec, const Tensor& z) {
    return decode(dec, z.data.data(), z.numel());
}

// Batch decode: one row in, one 28x28 image out per row.
inline std::vector<Tensor> decode_rows(const DecoderModel& dec, const Tensor& rows) {
    const auto acts = dec.net.forward(rows);
    std::vector<Tensor> out;
    out.reserve(rows.rows());
    const Tensor& y = acts.back();
    const std::size_t sample = y.numel() / rows.rows();
    for (std::size_t i = 0; i < rows.rows(); ++i) {
        Tensor img({28, 28});
        std::copy(y.data.data() + i * sample, y.data.data() + (i + 1) * sample, img.data.begin());
        out.push_back(std::move(img));
    }
    return out;
}

// Per-pixel MSE of predicting the training-split mean image everywhere.
inline double mean_image_baseline_mse(const LabeledDataset& train, const LabeledDataset& heldout) {
    const std::size_t sample = train.sample_numel();
    std::vector<double> mean(sample, 0.0);
    for (std::size_t i = 0; i < train.size(); ++i) {
        const double* row = train.features.data.data() + i * sample;
        for (std::size_t j = 0; j < sample; ++j) mean[j] += row[j];
    }
    for (auto& v : mean) v /= static_cast<double>(train.size());
    double s = 0.0;
    for (std::size_t i = 0; i < heldout.size(); ++i) {
        const double* row = heldout.features.data.data() + i * sample;
        for (std::size_t j = 0; j < sample; ++j) {
            const double d = row[j] - mean[j];
            s += d * d;
        }
    }
    return s / static_cast<double>(heldout.size() * sample);
}

// Held-out reconstruction MSE through encoder + decoder.
inline double reconstruction_mse(const EncoderModel& enc, const DecoderModel& dec,
                                 const LabeledDataset& ds) {
    const FeatureSet z = encode(enc, ds);
    const std::size_t chunk = 512;
    const std::size_t sample = ds.sample_numel();
    double s = 0.0;
    for (std::size_t lo = 0; lo < ds.size(); lo += chunk) {
        const std::size_t hi = std::min(ds.size(), lo + chunk);
        Tensor zc({hi - lo, kEmbedDim});
        std::copy(z.matrix.data.begin() + static_cast<std::ptrdiff_t>(lo * kEmbedDim),
                  z.matrix.data.begin() + static_cast<std::ptrdiff_t>(hi * kEmbedDim), zc.data.begin());
        const auto acts = dec.net.forward(zc);
        const Tensor& y = acts.back();
        for (std::size_t r = 0; r < hi - lo; ++r) {
            const double* want = ds.features.data.data() + (lo + r) * sample;
            const double* got = y.data.data() + r * sample;
            for (std::size_t j = 0; j < sample; ++j) {
                const double d = got[j] - want[j];
                s += d * d;
            }
        }
    }
    return s / static_cast<double>(ds.size() * sample);
}

} // namespace seq
