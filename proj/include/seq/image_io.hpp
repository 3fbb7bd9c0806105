#pragma once
#include <zlib.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "seq/errors.hpp"
#include "seq/generate.hpp"
#include "seq/tensor.hpp"

namespace seq {

// Flat 8-bit grayscale raster.
struct Raster {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels; // row-major, width*height

    std::uint8_t& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
    std::uint8_t at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
};

inline std::uint8_t quantize_pixel(double v) {
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

// Cells separated by 1-pixel white gutters; annotated cells get their outer
// pixel ring forced to white as the frame.
inline Raster render_grid(const ImageGrid& grid) {
    if (grid.rows == 0 || grid.cols == 0 || grid.cells.size() != grid.rows * grid.cols)
        throw PreconditionError("render_grid: malformed grid");
    constexpr std::size_t cell = 28;
    Raster out;
    out.width = grid.cols * cell + (grid.cols - 1);
    out.height = grid.rows * cell + (grid.rows - 1);
    out.pixels.assign(out.width * out.height, 255); // gutters at maxval

    for (std::size_t gr = 0; gr < grid.rows; ++gr)
        for (std::size_t gc = 0; gc < grid.cols; ++gc) {
            const GridCell& c = grid.at(gr, gc);
            if (c.image.numel() != cell * cell)
                throw PreconditionError("render_grid: cell image must be 28x28");
            const std::size_t r0 = gr * (cell + 1);
            const std::size_t c0 = gc * (cell + 1);
            for (std::size_t y = 0; y < cell; ++y)
                for (std::size_t x = 0; x < cell; ++x) {
                    const bool ring = y == 0 || x == 0 || y == cell - 1 || x == cell - 1;
                    const double v = (c.annotated && ring) ? 1.0 : c.image.data[y * cell + x];
                    out.at(r0 + y, c0 + x) = quantize_pixel(v);
                }
        }
    return out;
}

inline Raster render_image(const Tensor& img28) {
    ImageGrid g = make_blank_grid(1, 1);
    g.cells[0].image = img28.reshaped({28, 28});
    return render_grid(g);
}

// ---- PGM (binary P5, maxval 255) ----

inline std::vector<std::uint8_t> encode_pgm(const Raster& r) {
    std::string header = "P5\n" + std::to_string(r.width) + " " + std::to_string(r.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), r.pixels.begin(), r.pixels.end());
    return out;
}

inline Raster decode_pgm(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (std::isspace(bytes[pos])) {
                ++pos;
            } else if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    };
    auto read_token = [&]() -> std::string {
        skip_space();
        std::string t;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
        if (t.empty()) throw DataError("pgm: truncated header");
        return t;
    };
    if (read_token() != "P5") throw DataError("pgm: expected binary P5 magic");
    Raster r;
    try {
        r.width = std::stoul(read_token());
        r.height = std::stoul(read_token());
        if (read_token() != "255") throw DataError("pgm: only maxval 255 is supported");
    } catch (const std::invalid_argument&) {
        throw DataError("pgm: malformed header field");
    }
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw DataError("pgm: missing header terminator");
    ++pos; // single whitespace byte before the raster
    if (bytes.size() - pos < r.width * r.height) throw DataError("pgm: truncated pixel data");
    r.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + r.width * r.height));
    return r;
}

// ---- PNG (8-bit grayscale, zlib-compressed) ----

namespace detail {

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

inline void png_chunk(std::vector<std::uint8_t>& out, const char* tag,
                      const std::vector<std::uint8_t>& payload) {
    put_be32(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), tag, tag + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const auto crc = crc32(0L, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start));
    put_be32(out, static_cast<std::uint32_t>(crc));
}

inline std::vector<std::uint8_t> zlib_deflate(const std::vector<std::uint8_t>& raw) {
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> out(bound);
    if (compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw NumericError("png: deflate failed");
    out.resize(bound);
    return out;
}

inline std::vector<std::uint8_t> zlib_inflate(const std::vector<std::uint8_t>& comp,
                                              std::size_t expected) {
    std::vector<std::uint8_t> out(expected);
    uLongf got = static_cast<uLongf>(expected);
    if (uncompress(out.data(), &got, comp.data(), static_cast<uLong>(comp.size())) != Z_OK ||
        got != expected)
        throw DataError("png: corrupt compressed stream");
    return out;
}

inline int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

} // namespace detail

inline std::vector<std::uint8_t> encode_png(const Raster& r) {
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    std::vector<std::uint8_t> out(sig, sig + 8);

    std::vector<std::uint8_t> ihdr;
    detail::put_be32(ihdr, static_cast<std::uint32_t>(r.width));
    detail::put_be32(ihdr, static_cast<std::uint32_t>(r.height));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(0); // grayscale
    ihdr.push_back(0); // deflate
    ihdr.push_back(0); // adaptive filtering
    ihdr.push_back(0); // no interlace
    detail::png_chunk(out, "IHDR", ihdr);

    std::vector<std::uint8_t> raw;
    raw.reserve(r.height * (r.width + 1));
    for (std::size_t y = 0; y < r.height; ++y) {
        raw.push_back(0); // filter: none
        raw.insert(raw.end(), r.pixels.begin() + static_cast<std::ptrdiff_t>(y * r.width),
                   r.pixels.begin() + static_cast<std::ptrdiff_t>((y + 1) * r.width));
    }
    detail::png_chunk(out, "IDAT", detail::zlib_deflate(raw));
    detail::png_chunk(out, "IEND", {});
    return out;
}

// Minimal reader for the writer's own subset (8-bit grayscale, non-interlaced),
// accepting any of the five standard scanline filters.
inline Raster decode_png(const std::vector<std::uint8_t>& bytes) {
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
        throw DataError("png: bad signature");
    std::size_t pos = 8;
    Raster r;
    std::vector<std::uint8_t> idat;
    bool saw_ihdr = false;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t len = detail::get_be32(bytes.data() + pos);
        if (pos + 12 + len > bytes.size()) throw DataError("png: truncated chunk");
        const char* tag = reinterpret_cast<const char*>(bytes.data() + pos + 4);
        const std::uint8_t* payload = bytes.data() + pos + 8;
        if (std::memcmp(tag, "IHDR", 4) == 0) {
            if (len != 13) throw DataError("png: bad IHDR");
            r.width = detail::get_be32(payload);
            r.height = detail::get_be32(payload + 4);
            if (payload[8] != 8 || payload[9] != 0 || payload[12] != 0)
                throw DataError("png: only 8-bit non-interlaced grayscale is supported");
            saw_ihdr = true;
        } else if (std::memcmp(tag, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(tag, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (!saw_ihdr || idat.empty()) throw DataError("png: missing IHDR or IDAT");

    const std::size_t stride = r.width;
    const auto raw = detail::zlib_inflate(idat, r.height * (stride + 1));
    r.pixels.assign(r.width * r.height, 0);
    std::vector<std::uint8_t> prev(stride, 0);
    for (std::size_t y = 0; y < r.height; ++y) {
        const std::uint8_t filter = raw[y * (stride + 1)];
        const std::uint8_t* src = raw.data() + y * (stride + 1) + 1;
        std::uint8_t* dst = r.pixels.data() + y * stride;
        for (std::size_t x = 0; x < stride; ++x) {
            const int a = x > 0 ? dst[x - 1] : 0;
            const int b = prev[x];
            const int c = x > 0 ? prev[x - 1] : 0;
            int v = src[x];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += detail::paeth(a, b, c); break;
                default: throw DataError("png: unknown scanline filter");
            }
            dst[x] = static_cast<std::uint8_t>(v & 0xff);
        }
        std::copy(dst, dst + stride, prev.begin());
    }
    return r;
}

// ---- file helpers ----

inline void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError("write failed: " + path);
}

inline std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return bytes;
}

enum class ImageFormat { pgm, png };

inline ImageFormat format_from_name(const std::string& name) {
    if (name == "pgm") return ImageFormat::pgm;
    if (name == "png") return ImageFormat::png;
    throw ConfigError("unknown image format '" + name + "' (expected pgm or png)");
}

inline void export_grid(const ImageGrid& grid, const std::string& path, ImageFormat fmt) {
    const Raster r = render_grid(grid);
    write_bytes(path, fmt == ImageFormat::pgm ? encode_pgm(r) : encode_png(r));
}

} // namespace seq
