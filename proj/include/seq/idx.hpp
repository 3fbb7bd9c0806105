#pragma once
#include <zlib.h>

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "seq/errors.hpp"

namespace seq {

// IDX container: 4-byte big-endian magic (0x00000803 images / 0x00000801
// labels), one big-endian 4-byte size per dimension, then the raw unsigned
// byte payload. Gzip input is detected by the 1f 8b prefix.

struct IdxBadMagic : DataError {
    using DataError::DataError;
};
struct IdxTruncated : DataError {
    using DataError::DataError;
};
struct IdxDimOverflow : DataError {
    using DataError::DataError;
};

struct RawDataset {
    std::size_t n = 0, height = 0, width = 0;
    std::vector<std::uint8_t> images; // n * height * width, row-major
    std::vector<std::uint8_t> labels; // n
};

namespace detail {

inline std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
           std::uint32_t(p[3]);
}

inline void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(std::uint8_t(v >> 24));
    out.push_back(std::uint8_t(v >> 16));
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v));
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return bytes;
}

inline std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in, const std::string& path) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 16) != Z_OK) throw DataError("zlib init failed for " + path);
    std::vector<std::uint8_t> out;
    out.reserve(in.size() * 4);
    std::uint8_t buf[1 << 16];
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    int rc = Z_OK;
    do {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw DataError("gzip decompression failed for " + path);
        }
        out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
    } while (rc != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

} // namespace detail

struct IdxContent {
    std::uint32_t magic = 0;
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> payload;
};

inline IdxContent parse_idx_bytes(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
    if (bytes.size() < 4) throw IdxTruncated(origin + ": shorter than the 4-byte magic");
    IdxContent c;
    c.magic = detail::read_be32(bytes.data());
    std::size_t ndims = 0;
    if (c.magic == 0x00000803u)
        ndims = 3;
    else if (c.magic == 0x00000801u)
        ndims = 1;
    else {
        char hex[16];
        std::snprintf(hex, sizeof(hex), "0x%08x", c.magic);
        throw IdxBadMagic(origin + ": bad magic " + hex);
    }
    if (bytes.size() < 4 + 4 * ndims) throw IdxTruncated(origin + ": header cut short");
    std::uint64_t count = 1;
    for (std::size_t d = 0; d < ndims; ++d) {
        const std::uint32_t v = detail::read_be32(bytes.data() + 4 + 4 * d);
        c.dims.push_back(v);
        count *= v;
        if (count > (std::uint64_t(1) << 40))
            throw IdxDimOverflow(origin + ": dimensions overflow a sane payload size");
    }
    const std::size_t want = 4 + 4 * ndims + count;
    if (bytes.size() < want)
        throw IdxTruncated(origin + ": payload has " + std::to_string(bytes.size() - 4 - 4 * ndims) +
                           " bytes, header promises " + std::to_string(count));
    if (bytes.size() > want)
        throw IdxTruncated(origin + ": trailing bytes after payload");
    c.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(4 + 4 * ndims), bytes.end());
    return c;
}

inline IdxContent parse_idx_file(const std::string& path) {
    std::vector<std::uint8_t> bytes = detail::read_file_bytes(path);
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) bytes = detail::gunzip(bytes, path);
    return parse_idx_bytes(bytes, path);
}

// Loads an image file + label file pair into one dataset.
inline RawDataset parse_idx(const std::string& images_path, const std::string& labels_path) {
    const IdxContent imgs = parse_idx_file(images_path);
    if (imgs.magic != 0x00000803u) throw IdxBadMagic(images_path + ": not an image file");
    const IdxContent labs = parse_idx_file(labels_path);
    if (labs.magic != 0x00000801u) throw IdxBadMagic(labels_path + ": not a label file");
    if (imgs.dims[0] != labs.dims[0])
        throw DataError("image count " + std::to_string(imgs.dims[0]) + " != label count " +
                        std::to_string(labs.dims[0]));
    if (imgs.dims[0] == 0) throw DataError(images_path + ": empty dataset (zero items)");
    if (imgs.dims[1] == 0 || imgs.dims[2] == 0)
        throw DataError(images_path + ": zero-sized image dimensions");
    RawDataset ds;
    ds.n = imgs.dims[0];
    ds.height = imgs.dims[1];
    ds.width = imgs.dims[2];
    ds.images = imgs.payload;
    ds.labels = labs.payload;
    for (std::size_t i = 0; i < ds.n; ++i)
        if (ds.labels[i] > 9)
            throw DataError(labels_path + ": label " + std::to_string(int(ds.labels[i])) +
                            " at index " + std::to_string(i) + " outside 0..9");
    return ds;
}

inline std::vector<std::uint8_t> serialize_idx_images(const RawDataset& ds) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + ds.images.size());
    detail::write_be32(out, 0x00000803u);
    detail::write_be32(out, static_cast<std::uint32_t>(ds.n));
    detail::write_be32(out, static_cast<std::uint32_t>(ds.height));
    detail::write_be32(out, static_cast<std::uint32_t>(ds.width));
    out.insert(out.end(), ds.images.begin(), ds.images.end());
    return out;
}

inline std::vector<std::uint8_t> serialize_idx_labels(const RawDataset& ds) {
    std::vector<std::uint8_t> out;
    out.reserve(8 + ds.labels.size());
    detail::write_be32(out, 0x00000801u);
    detail::write_be32(out, static_cast<std::uint32_t>(ds.n));
    out.insert(out.end(), ds.labels.begin(), ds.labels.end());
    return out;
}

} // namespace seq
