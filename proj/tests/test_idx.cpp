#include <zlib.h>

#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "seq/idx.hpp"

namespace {

std::vector<std::uint8_t> label_bytes(const std::vector<std::uint8_t>& labels) {
    std::vector<std::uint8_t> b;
    seq::detail::write_be32(b, 0x00000801u);
    seq::detail::write_be32(b, static_cast<std::uint32_t>(labels.size()));
    b.insert(b.end(), labels.begin(), labels.end());
    return b;
}

std::vector<std::uint8_t> image_bytes(std::uint32_t n, std::uint32_t h, std::uint32_t w,
                                      const std::vector<std::uint8_t>& pixels) {
    std::vector<std::uint8_t> b;
    seq::detail::write_be32(b, 0x00000803u);
    seq::detail::write_be32(b, n);
    seq::detail::write_be32(b, h);
    seq::detail::write_be32(b, w);
    b.insert(b.end(), pixels.begin(), pixels.end());
    return b;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("seq_idx_test_" + name);
}

void dump(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(p, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> gzip(const std::vector<std::uint8_t>& in) {
    z_stream zs{};
    REQUIRE(deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) == Z_OK);
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())) + 32);
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    REQUIRE(deflate(&zs, Z_FINISH) == Z_STREAM_END);
    out.resize(out.size() - zs.avail_out);
    deflateEnd(&zs);
    return out;
}

} // namespace

TEST_CASE("label file with three entries parses exactly") {
    const auto c = seq::parse_idx_bytes(label_bytes({5, 0, 4}), "mem");
    REQUIRE(c.magic == 0x00000801u);
    REQUIRE(c.dims == std::vector<std::uint32_t>{3});
    REQUIRE(c.payload == std::vector<std::uint8_t>{5, 0, 4});
}

TEST_CASE("image file header yields (1,28,28) and 784 payload bytes") {
    const auto c = seq::parse_idx_bytes(image_bytes(1, 28, 28, std::vector<std::uint8_t>(784, 7)), "mem");
    REQUIRE(c.magic == 0x00000803u);
    REQUIRE(c.dims == std::vector<std::uint32_t>{1, 28, 28});
    REQUIRE(c.payload.size() == 784);
}

TEST_CASE("unknown magic is rejected") {
    std::vector<std::uint8_t> b;
    seq::detail::write_be32(b, 0x00000802u);
    seq::detail::write_be32(b, 1);
    b.push_back(0);
    REQUIRE_THROWS_AS(seq::parse_idx_bytes(b, "mem"), seq::IdxBadMagic);
}

TEST_CASE("truncation in header, payload, or trailing junk is rejected") {
    const auto good = label_bytes({1, 2, 3});

    std::vector<std::uint8_t> short_magic(good.begin(), good.begin() + 3);
    REQUIRE_THROWS_AS(seq::parse_idx_bytes(short_magic, "mem"), seq::IdxTruncated);

    std::vector<std::uint8_t> short_header(good.begin(), good.begin() + 6);
    REQUIRE_THROWS_AS(seq::parse_idx_bytes(short_header, "mem"), seq::IdxTruncated);

    std::vector<std::uint8_t> short_payload(good.begin(), good.end() - 1);
    REQUIRE_THROWS_AS(seq::parse_idx_bytes(short_payload, "mem"), seq::IdxTruncated);

    std::vector<std::uint8_t> trailing = good;
    trailing.push_back(0xAB);
    REQUIRE_THROWS_AS(seq::parse_idx_bytes(trailing, "mem"), seq::IdxTruncated);
}

TEST_CASE("absurd dimensions are rejected before allocation") {
    std::vector<std::uint8_t> b;
    seq::detail::write_be32(b, 0x00000803u);
    seq::detail::write_be32(b, 0xFFFFFFFFu);
    seq::detail::write_be32(b, 0xFFFFFFFFu);
    seq::detail::write_be32(b, 0xFFFFFFFFu);
    REQUIRE_THROWS_AS(seq::parse_idx_bytes(b, "mem"), seq::IdxDimOverflow);
}

TEST_CASE("gzip-compressed file parses identically to the plain file") {
    const auto plain = image_bytes(2, 3, 3, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17});
    const auto p_plain = temp_file("plain.idx");
    const auto p_gz = temp_file("comp.idx.gz");
    dump(p_plain, plain);
    dump(p_gz, gzip(plain));

    const auto a = seq::parse_idx_file(p_plain.string());
    const auto b = seq::parse_idx_file(p_gz.string());
    REQUIRE(a.magic == b.magic);
    REQUIRE(a.dims == b.dims);
    REQUIRE(a.payload == b.payload);

    std::filesystem::remove(p_plain);
    std::filesystem::remove(p_gz);
}

TEST_CASE("serialize then parse is byte-identical") {
    seq::RawDataset ds;
    ds.n = 3;
    ds.height = 2;
    ds.width = 2;
    for (int i = 0; i < 12; ++i) ds.images.push_back(static_cast<std::uint8_t>(i * 20));
    ds.labels = {9, 0, 3};

    const auto ibytes = seq::serialize_idx_images(ds);
    const auto lbytes = seq::serialize_idx_labels(ds);
    const auto ic = seq::parse_idx_bytes(ibytes, "mem");
    const auto lc = seq::parse_idx_bytes(lbytes, "mem");
    REQUIRE(ic.payload == ds.images);
    REQUIRE(lc.payload == ds.labels);

    // Round trip through a second serialize must reproduce the exact bytes.
    seq::RawDataset ds2;
    ds2.n = ic.dims[0];
    ds2.height = ic.dims[1];
    ds2.width = ic.dims[2];
    ds2.images = ic.payload;
    ds2.labels = lc.payload;
    REQUIRE(seq::serialize_idx_images(ds2) == ibytes);
    REQUIRE(seq::serialize_idx_labels(ds2) == lbytes);
}

TEST_CASE("paired loader checks counts and label range") {
    seq::RawDataset ds;
    ds.n = 2;
    ds.height = 2;
    ds.width = 2;
    ds.images.assign(8, 1);
    ds.labels = {1, 2};

    const auto pi = temp_file("pair_images.idx");
    const auto pl = temp_file("pair_labels.idx");
    dump(pi, seq::serialize_idx_images(ds));
    dump(pl, seq::serialize_idx_labels(ds));
    const auto loaded = seq::parse_idx(pi.string(), pl.string());
    REQUIRE(loaded.n == 2);
    REQUIRE(loaded.images == ds.images);
    REQUIRE(loaded.labels == ds.labels);

    // Count mismatch.
    seq::RawDataset one = ds;
    one.n = 1;
    one.labels = {1};
    dump(pl, seq::serialize_idx_labels(one));
    REQUIRE_THROWS_AS(seq::parse_idx(pi.string(), pl.string()), seq::DataError);

    // Label out of range.
    seq::RawDataset bad = ds;
    bad.labels = {1, 10};
    dump(pl, seq::serialize_idx_labels(bad));
    REQUIRE_THROWS_AS(seq::parse_idx(pi.string(), pl.string()), seq::DataError);

    // Swapped magics.
    REQUIRE_THROWS_AS(seq::parse_idx(pl.string(), pi.string()), seq::IdxBadMagic);

    std::filesystem::remove(pi);
    std::filesystem::remove(pl);
}

TEST_CASE("missing file raises a data error naming the path") {
    try {
        seq::parse_idx_file("/nonexistent/seq-test-missing.idx");
        FAIL("expected DataError");
    } catch (const seq::DataError& e) {
        REQUIRE(std::string(e.what()).find("seq-test-missing") != std::string::npos);
    }
}
