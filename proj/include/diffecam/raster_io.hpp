#pragma once

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "image.hpp"
#include "metrics.hpp"

namespace diffecam {

// DECR raster: "DECR", u32 rows, u32 cols (little-endian), then rows*cols
// little-endian IEEE-754 doubles, row-major.

namespace detail {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline std::uint64_t get_le(const unsigned char* p, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

inline std::vector<unsigned char> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_all(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write to '" + path + "' failed");
}

} // namespace detail

inline std::vector<unsigned char> encode_raster(const Image2D& img) {
  if (img.rows() > std::numeric_limits<std::uint32_t>::max() ||
      img.cols() > std::numeric_limits<std::uint32_t>::max()) {
    throw DimensionError("raster dimensions exceed 32 bits");
  }
  std::vector<unsigned char> out{'D', 'E', 'C', 'R'};
  out.reserve(12 + 8 * img.size());
  detail::put_u32(out, static_cast<std::uint32_t>(img.rows()));
  detail::put_u32(out, static_cast<std::uint32_t>(img.cols()));
  for (double v : img) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

inline Image2D decode_raster(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 4) throw ParseError("truncated raster magic", bytes.size());
  if (std::memcmp(bytes.data(), "DECR", 4) != 0) throw ParseError("bad raster magic", 0);
  if (bytes.size() < 12) throw ParseError("truncated raster header", bytes.size());
  const auto rows = detail::get_le(bytes.data() + 4, 4);
  const auto cols = detail::get_le(bytes.data() + 8, 4);
  if (rows == 0 || cols == 0) throw ParseError("raster has a zero dimension", 4);
  // rows, cols < 2^32, so the product fits in 64 bits; the byte count may not.
  const std::uint64_t count = rows * cols;
  if (count > (std::numeric_limits<std::uint64_t>::max() - 12) / 8) {
    throw ParseError("raster dimensions overflow", 4);
  }
  const std::uint64_t expected = 12 + 8 * count;
  if (bytes.size() < expected) {
    // report where the first incomplete pixel starts
    const std::size_t complete = (bytes.size() - 12) / 8;
    throw ParseError("truncated raster payload: expected " + std::to_string(expected) +
                         " bytes, found " + std::to_string(bytes.size()),
                     12 + 8 * complete);
  }
  if (bytes.size() > expected) throw ParseError("trailing bytes after raster payload", expected);
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<double>(detail::get_le(bytes.data() + 12 + 8 * i, 8));
  }
  return Image2D(rows, cols, std::move(data));
}

inline void write_raster(const Image2D& img, const std::string& path) {
  detail::write_all(path, encode_raster(img));
}

inline Image2D read_raster(const std::string& path) {
  return decode_raster(detail::read_all(path));
}

inline Image2D mask_to_image(const Mask& mask) {
  Image2D out(mask.rows(), mask.cols());
  for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 1.0 : 0.0;
  return out;
}

inline Mask image_to_mask(const Image2D& img) {
  Mask out(img.rows(), img.cols());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = img[i] != 0.0 ? 1 : 0;
  return out;
}

// Binary PGM (P5, maxval 255) for viewing. Export runs quantize_8bit first.

inline void write_pgm(const Image2D& img, const std::string& path) {
  const Image2D q = quantize_8bit(img);
  const std::string header =
      "P5\n" + std::to_string(img.cols()) + " " + std::to_string(img.rows()) + "\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  for (double v : q) bytes.push_back(static_cast<unsigned char>(v));
  detail::write_all(path, bytes);
}

inline Image2D decode_pgm(const std::vector<unsigned char>& bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* what) {
    skip_space();
    const std::size_t start = pos;
    std::uint64_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > std::numeric_limits<std::uint32_t>::max()) {
        throw ParseError(std::string("pgm ") + what + " overflows", start);
      }
      ++pos;
    }
    if (pos == start) throw ParseError(std::string("pgm ") + what + " missing", start);
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw ParseError("not a binary PGM (P5)", 0);
  }
  pos = 2;
  const auto cols = read_uint("width");
  const auto rows = read_uint("height");
  const auto maxval = read_uint("maxval");
  if (maxval != 255) throw ParseError("only maxval 255 is supported", pos);
  if (rows == 0 || cols == 0) throw ParseError("pgm has a zero dimension", pos);
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw ParseError("pgm header not terminated", pos);
  }
  ++pos;
  const std::uint64_t count = rows * cols;
  if (bytes.size() - pos < count) {
    throw ParseError("truncated pgm payload", bytes.size());
  }
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) data[i] = bytes[pos + i];
  return Image2D(rows, cols, std::move(data));
}

inline Image2D read_pgm(const std::string& path) { return decode_pgm(detail::read_all(path)); }

/// Read either format, chosen by file magic.
inline Image2D read_image(const std::string& path) {
  const auto bytes = detail::read_all(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes);
  return decode_raster(bytes);
}

} // namespace diffecam
