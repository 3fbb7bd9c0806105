#pragma once
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "seq/codebook.hpp"
#include "seq/decoder.hpp"
#include "seq/encoder.hpp"
#include "seq/errors.hpp"
#include "seq/image_io.hpp"

// Model bundle file, designed for cross-language reads:
//   magic "SEQ1" | u32 version
//   sections, each: 4-byte tag | u64 payload length | payload
//     META  arch name (u32 len + bytes), u64 seed, config hash (u32 len + hex bytes)
//     ENCP  encoder parameter tensors
//     DECP  decoder parameter tensors (optional)
//     CDBK  codebook: u32 K, u32 d, u32 num_classes; K*d f64 centroids;
//           K i32 labels; K*num_classes u64 histograms; u32 repaired count + u32 ids
// All integers and floats little-endian. Tensor list: u32 count, then per
// tensor u32 ndim, ndim u64 dims, doubles. Sections are written in the fixed
// order above, so save(load(bytes)) == bytes.

namespace seq {

struct ModelBundle {
    std::uint32_t version = 1;
    Arch arch = Arch::lae2;
    std::uint64_t seed = 0;
    std::string config_hash; // hex digest of the resolved run config
    std::vector<Tensor> encoder_params; // W, b per parameterized layer
    std::vector<Tensor> decoder_params;
    std::optional<Codebook> codebook;
};

namespace detail {

struct ByteWriter {
    std::vector<std::uint8_t> out;

    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
};

struct ByteReader {
    const std::uint8_t* p;
    std::size_t n;
    std::size_t pos = 0;

    void need(std::size_t k) const {
        if (pos + k > n) throw DataError("bundle: truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        const std::uint32_t len = u32();
        need(len);
        std::string s(reinterpret_cast<const char*>(p + pos), len);
        pos += len;
        return s;
    }
};

inline void write_tensors(ByteWriter& w, const std::vector<Tensor>& ts) {
    w.u32(static_cast<std::uint32_t>(ts.size()));
    for (const Tensor& t : ts) {
        w.u32(static_cast<std::uint32_t>(t.ndim()));
        for (std::size_t d : t.shape) w.u64(d);
        for (double v : t.data) w.f64(v);
    }
}

inline std::vector<Tensor> read_tensors(ByteReader& r) {
    const std::uint32_t count = r.u32();
    std::vector<Tensor> ts;
    ts.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t ndim = r.u32();
        if (ndim == 0 || ndim > 8) throw DataError("bundle: bad tensor rank");
        std::vector<std::size_t> shape(ndim);
        std::size_t numel = 1;
        for (auto& d : shape) {
            d = static_cast<std::size_t>(r.u64());
            if (d == 0 || numel > (1ull << 40) / d) throw DataError("bundle: bad tensor dims");
            numel *= d;
        }
        Tensor t(shape);
        for (auto& v : t.data) v = r.f64();
        ts.push_back(std::move(t));
    }
    return ts;
}

inline void write_section(ByteWriter& w, const char tag[5], const std::vector<std::uint8_t>& payload) {
    w.raw(tag, 4);
    w.u64(payload.size());
    w.raw(payload.data(), payload.size());
}

} // namespace detail

inline std::vector<std::uint8_t> serialize_bundle(const ModelBundle& b) {
    detail::ByteWriter w;
    w.raw("SEQ1", 4);
    w.u32(b.version);

    {
        detail::ByteWriter meta;
        meta.str(arch_name(b.arch));
        meta.u64(b.seed);
        meta.str(b.config_hash);
        detail::write_section(w, "META", meta.out);
    }
    {
        detail::ByteWriter enc;
        detail::write_tensors(enc, b.encoder_params);
        detail::write_section(w, "ENCP", enc.out);
    }
    if (!b.decoder_params.empty()) {
        detail::ByteWriter dec;
        detail::write_tensors(dec, b.decoder_params);
        detail::write_section(w, "DECP", dec.out);
    }
    if (b.codebook) {
        const Codebook& cb = *b.codebook;
        detail::ByteWriter s;
        s.u32(static_cast<std::uint32_t>(cb.k()));
        s.u32(static_cast<std::uint32_t>(cb.dim()));
        s.u32(static_cast<std::uint32_t>(cb.num_classes));
        for (double v : cb.centroids.data) s.f64(v);
        for (int l : cb.cluster_labels) s.i32(l);
        for (const auto& h : cb.histograms)
            for (std::uint64_t v : h) s.u64(v);
        s.u32(static_cast<std::uint32_t>(cb.repaired_labels.size()));
        for (std::size_t c : cb.repaired_labels) s.u32(static_cast<std::uint32_t>(c));
        detail::write_section(w, "CDBK", s.out);
    }
    return std::move(w.out);
}

inline ModelBundle parse_bundle(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader r{bytes.data(), bytes.size()};
    r.need(4);
    if (std::memcmp(bytes.data(), "SEQ1", 4) != 0) throw DataError("bundle: bad magic (expected SEQ1)");
    r.pos = 4;
    ModelBundle b;
    b.version = r.u32();
    if (b.version != 1) throw DataError("bundle: unsupported version " + std::to_string(b.version));

    bool saw_meta = false, saw_enc = false;
    while (r.pos < r.n) {
        r.need(12);
        char tag[5] = {0};
        std::memcpy(tag, bytes.data() + r.pos, 4);
        r.pos += 4;
        const std::uint64_t len = r.u64();
        r.need(len);
        detail::ByteReader s{bytes.data() + r.pos, static_cast<std::size_t>(len)};
        r.pos += len;

        if (std::strcmp(tag, "META") == 0) {
            b.arch = arch_from_name(s.str());
            b.seed = s.u64();
            b.config_hash = s.str();
            saw_meta = true;
        } else if (std::strcmp(tag, "ENCP") == 0) {
            b.encoder_params = detail::read_tensors(s);
            saw_enc = true;
        } else if (std::strcmp(tag, "DECP") == 0) {
            b.decoder_params = detail::read_tensors(s);
        } else if (std::strcmp(tag, "CDBK") == 0) {
            Codebook cb;
            const std::uint32_t k = s.u32(), d = s.u32(), nc = s.u32();
            if (k == 0 || d == 0 || nc == 0) throw DataError("bundle: zero-sized codebook");
            cb.centroids = Tensor({k, d});
            cb.num_classes = nc;
            for (auto& v : cb.centroids.data) v = s.f64();
            cb.cluster_labels.resize(k);
            for (auto& l : cb.cluster_labels) l = s.i32();
            cb.histograms.assign(k, std::vector<std::uint64_t>(nc, 0));
            for (auto& h : cb.histograms)
                for (auto& v : h) v = s.u64();
            const std::uint32_t nrep = s.u32();
            cb.repaired_labels.resize(nrep);
            for (auto& c : cb.repaired_labels) c = s.u32();
            b.codebook = std::move(cb);
        } else {
            throw DataError(std::string("bundle: unknown section tag '") + tag + "'");
        }
        if (s.pos != s.n) throw DataError(std::string("bundle: trailing bytes in section ") + tag);
    }
    if (!saw_meta || !saw_enc) throw DataError("bundle: missing META or ENCP section");
    return b;
}

inline void save_bundle(const ModelBundle& b, const std::string& path) {
    write_bytes(path, serialize_bundle(b));
}

inline ModelBundle load_bundle(const std::string& path) { return parse_bundle(read_bytes(path)); }

// FNV-1a 64, printed as 16 hex digits; used for config/bundle fingerprints.
inline std::string fnv1a_hex(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string fnv1a_hex(const std::string& s) { return fnv1a_hex(s.data(), s.size()); }
inline std::string fnv1a_hex(const std::vector<std::uint8_t>& b) { return fnv1a_hex(b.data(), b.size()); }

// ---- model <-> bundle param shuttling ----

inline std::vector<Tensor> collect_params(const Network& net) {
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < net.specs.size(); ++i) {
        if (!net.specs[i].has_params()) continue;
        out.push_back(net.params[i].W);
        out.push_back(net.params[i].b);
    }
    return out;
}

inline void restore_params(Network& net, const std::vector<Tensor>& flat) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < net.specs.size(); ++i) {
        if (!net.specs[i].has_params()) continue;
        if (pos + 2 > flat.size()) throw DataError("bundle: too few parameter tensors");
        if (!flat[pos].same_shape(net.params[i].W) || !flat[pos + 1].same_shape(net.params[i].b))
            throw DataError("bundle: parameter tensor " + std::to_string(pos) + " has shape " +
                            shape_str(flat[pos].shape) + ", arch expects " +
                            shape_str(net.params[i].W.shape));
        net.params[i].W = flat[pos];
        net.params[i].b = flat[pos + 1];
        pos += 2;
    }
    if (pos != flat.size()) throw DataError("bundle: too many parameter tensors");
}

inline ModelBundle bundle_from_models(const EncoderModel& enc, const DecoderModel* dec,
                                      const Codebook* cb, std::uint64_t seed,
                                      const std::string& config_hash) {
    if (!enc.trained) throw PreconditionError("bundle: encoder is not trained");
    ModelBundle b;
    b.arch = enc.arch;
    b.seed = seed;
    b.config_hash = config_hash;
    b.encoder_params = collect_params(enc.net);
    if (dec) b.decoder_params = collect_params(dec->net);
    if (cb) b.codebook = *cb;
    return b;
}

inline EncoderModel encoder_from_bundle(const ModelBundle& b) {
    EncoderModel enc;
    enc.arch = b.arch;
    enc.net = Network::build(encoder_specs(b.arch), encoder_input_shape(b.arch), WeightInit::he, 0);
    restore_params(enc.net, b.encoder_params);
    enc.trained = true;
    return enc;
}

inline DecoderModel decoder_from_bundle(const ModelBundle& b) {
    if (b.decoder_params.empty()) throw PreconditionError("bundle has no decoder parameters");
    DecoderModel dec = make_decoder(b.arch, WeightInit::he, 0);
    restore_params(dec.net, b.decoder_params);
    dec.trained = true;
    return dec;
}

} // namespace seq
