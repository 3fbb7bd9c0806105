#pragma once
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace seq {

// SplitMix64. State transition: z += 0x9E3779B97F4A7C15; then two xor-shift-multiply
// mixing rounds (0xBF58476D1CE4E5B9, 0x94D049BB133111EB), final xor-shift by 31.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

// xoshiro256** — the project RNG for shuffling, init draws and sampling.
// State: four 64-bit words filled from successive SplitMix64 outputs of the seed.
// next(): result = rotl(s1 * 5, 7) * 9; then the xoshiro256 linear engine update
//   t = s1 << 17; s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t; s3 = rotl(s3, 45).
// Orderings are reproducible from the seed alone in any language.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm.next();
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, n). Draw rule: next() % n.
    std::uint64_t next_below(std::uint64_t n) { return next() % n; }

    // Uniform double in [0, 1): top 53 bits scaled by 2^-53.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; draws two uniforms per pair of outputs.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Domain-separated stream seeds, so weight init and epoch shuffles never share a stream.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t tag) {
    SplitMix64 sm(seed ^ (0x9E3779B97F4A7C15ULL * (tag + 1)));
    return sm.next();
}

// Stream tag vocabulary: domain in the high 32 bits, index (layer, epoch,
// restart, ...) in the low 32.
namespace streams {
constexpr std::uint64_t weight_init = 1;
constexpr std::uint64_t shuffle = 2;
constexpr std::uint64_t kmeans = 3;
inline std::uint64_t tag(std::uint64_t domain, std::uint64_t index) {
    return (domain << 32) + index;
}
} // namespace streams

// Fisher-Yates over 0..n-1, descending: for i = n-1..1, j = next() % (i+1), swap.
inline std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

} // namespace seq
