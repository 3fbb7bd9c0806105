#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "seq/errors.hpp"
#include "seq/idx.hpp"
#include "seq/network.hpp"
#include "seq/rng.hpp"
#include "seq/tensor.hpp"

namespace seq {

enum class Layout { flat, chw };

// Pixel features scaled to [0,1]: (N,784) for dense encoders, (N,1,28,28)
// for convolutional ones.
struct LabeledDataset {
    Tensor features;
    std::vector<int> labels;
    std::string split_tag;

    std::size_t size() const { return labels.size(); }
    std::size_t sample_numel() const {
        return labels.empty() ? 0 : features.numel() / labels.size();
    }
};

inline LabeledDataset normalize(const RawDataset& raw, Layout layout, std::string split_tag = "") {
    LabeledDataset ds;
    ds.split_tag = std::move(split_tag);
    const std::size_t px = raw.height * raw.width;
    ds.features = layout == Layout::flat ? Tensor({raw.n, px})
                                         : Tensor({raw.n, 1, raw.height, raw.width});
    for (std::size_t i = 0; i < raw.n * px; ++i)
        ds.features.data[i] = static_cast<double>(raw.images[i]) / 255.0;
    ds.labels.assign(raw.labels.begin(), raw.labels.end());
    return ds;
}

struct Batch {
    Tensor x;
    std::vector<int> labels;
    std::vector<std::size_t> indices;
};

// Seeded shuffled batch iteration: one permutation per (seed, epoch), every
// sample exactly once per epoch, last batch may be short. The permutation is
// Fisher-Yates over the stream Rng(stream_seed(seed, (shuffle<<32)+epoch)).
class BatchStream {
public:
    BatchStream(const LabeledDataset& ds, std::size_t batch_size, std::uint64_t seed, std::uint64_t epoch)
        : ds_(&ds), batch_size_(batch_size) {
        if (ds.size() == 0) throw PreconditionError("batches: empty dataset");
        if (batch_size < 1) throw PreconditionError("batches: batch_size must be >= 1");
        Rng rng(stream_seed(seed, streams::tag(streams::shuffle, epoch)));
        perm_ = shuffled_indices(ds.size(), rng);
    }

    std::size_t batch_count() const { return (perm_.size() + batch_size_ - 1) / batch_size_; }
    const std::vector<std::size_t>& permutation() const { return perm_; }

    Batch get(std::size_t b) const {
        const std::size_t lo = b * batch_size_;
        const std::size_t hi = std::min(perm_.size(), lo + batch_size_);
        if (lo >= hi) throw PreconditionError("batches: batch index out of range");
        const std::size_t sample = ds_->sample_numel();
        std::vector<std::size_t> shape = ds_->features.shape;
        shape[0] = hi - lo;
        Batch out;
        out.x = Tensor(std::move(shape));
        out.labels.resize(hi - lo);
        out.indices.assign(perm_.begin() + static_cast<std::ptrdiff_t>(lo),
                           perm_.begin() + static_cast<std::ptrdiff_t>(hi));
        for (std::size_t r = 0; r < hi - lo; ++r) {
            const std::size_t src = perm_[lo + r];
            const double* from = ds_->features.data.data() + src * sample;
            std::copy(from, from + sample, out.x.data.data() + r * sample);
            out.labels[r] = ds_->labels[src];
        }
        return out;
    }

private:
    const LabeledDataset* ds_;
    std::size_t batch_size_;
    std::vector<std::size_t> perm_;
};

// Keeps the first n samples; n = 0 keeps everything.
inline LabeledDataset head(const LabeledDataset& ds, std::size_t n) {
    if (n == 0 || n >= ds.size()) return ds;
    LabeledDataset out;
    out.split_tag = ds.split_tag;
    std::vector<std::size_t> shape = ds.features.shape;
    shape[0] = n;
    const std::size_t sample = ds.sample_numel();
    out.features = Tensor(std::move(shape));
    std::copy(ds.features.data.begin(), ds.features.data.begin() + static_cast<std::ptrdiff_t>(n * sample),
              out.features.data.begin());
    out.labels.assign(ds.labels.begin(), ds.labels.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
}

} // namespace seq
