#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace diffecam {

/// Dense row-major raster on a fixed grid.
///
/// The same template carries real spatial maps (objects, PSFs, measurements,
/// edge images), complex frequency fields and boolean sampling masks.
template <typename T>
class Image {
public:
  using value_type = T;

  Image() = default;

  Image(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) {
      throw DimensionError("image dimensions must be positive, got " +
                           shape_string(rows, cols));
    }
  }

  Image(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows == 0 || cols == 0) {
      throw DimensionError("image dimensions must be positive, got " +
                           shape_string(rows, cols));
    }
    if (data_.size() != rows * cols) {
      throw DimensionError("payload of " + std::to_string(data_.size()) +
                           " values does not fill " + shape_string(rows, cols));
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }
  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool same_shape(std::size_t rows, std::size_t cols) const noexcept {
    return rows_ == rows && cols_ == cols;
  }
  template <typename U>
  bool same_shape(const Image<U>& other) const noexcept {
    return same_shape(other.rows(), other.cols());
  }

  std::string shape() const { return shape_string(rows_, cols_); }

  friend bool operator==(const Image& a, const Image& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  static std::string shape_string(std::size_t rows, std::size_t cols) {
    return std::to_string(rows) + "x" + std::to_string(cols);
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Image2D = Image<double>;
using FrequencyField = Image<std::complex<double>>;
/// Sampling mask over measurement pixels; nonzero means sampled.
using Mask = Image<std::uint8_t>;

/// Working grid plus the zero-padded grid every convolution runs on.
struct GridSpec {
  std::size_t rows = 128;
  std::size_t cols = 128;
  std::size_t pad_rows = 256;
  std::size_t pad_cols = 256;

  static GridSpec with_default_padding(std::size_t rows, std::size_t cols) {
    GridSpec g{rows, cols, 2 * rows, 2 * cols};
    g.validate();
    return g;
  }

  void validate() const {
    if (rows == 0 || cols == 0 || pad_rows == 0 || pad_cols == 0) {
      throw ConfigError("grid dimensions must be positive");
    }
    if (pad_rows < rows || pad_cols < cols) {
      throw ConfigError("padded grid " + Image2D::shape_string(pad_rows, pad_cols) +
                        " is smaller than working grid " +
                        Image2D::shape_string(rows, cols));
    }
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

template <typename A, typename B>
void require_same_shape(const Image<A>& a, const Image<B>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch " + a.shape() +
                         " vs " + b.shape());
  }
}

inline double sum(const Image2D& img) {
  double s = 0.0;
  for (double v : img) s += v;
  return s;
}

inline double max_value(const Image2D& img) {
  return *std::max_element(img.begin(), img.end());
}

inline double min_value(const Image2D& img) {
  return *std::min_element(img.begin(), img.end());
}

inline double max_abs(const Image2D& img) {
  double m = 0.0;
  for (double v : img) m = std::max(m, v < 0 ? -v : v);
  return m;
}

inline double dot(const Image2D& a, const Image2D& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Image2D& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

inline Image2D operator+(const Image2D& a, const Image2D& b) {
  require_same_shape(a, b, "add");
  Image2D out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

inline Image2D operator-(const Image2D& a, const Image2D& b) {
  require_same_shape(a, b, "subtract");
  Image2D out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

inline Image2D operator*(double s, const Image2D& a) {
  Image2D out = a;
  for (double& v : out) v *= s;
  return out;
}

/// Zero every pixel the mask does not sample.
inline Image2D apply_mask(const Image2D& img, const Mask& mask) {
  require_same_shape(img, mask, "apply_mask");
  Image2D out = img;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!mask[i]) out[i] = 0.0;
  }
  return out;
}

inline std::size_t count_sampled(const Mask& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
}

} // namespace diffecam
