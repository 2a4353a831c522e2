#pragma once

#include "fft.hpp"
#include "image.hpp"

namespace diffecam {

/// Periodic convolution of two rasters on the same grid, computed as the
/// inverse transform of the product of their spectra.
inline Image2D circular_convolve(const Image2D& a, const Image2D& b) {
  require_same_shape(a, b, "circular_convolve");
  HalfSpectrum fa = real_forward(a);
  const HalfSpectrum fb = real_forward(b);
  for (std::size_t i = 0; i < fa.bins.size(); ++i) fa.bins[i] *= fb.bins[i];
  return real_inverse(std::move(fa));
}

/// Convolution against a precomputed kernel spectrum.
inline Image2D convolve_with_spectrum(const Image2D& a, const HalfSpectrum& kernel_hat) {
  if (!a.same_shape(kernel_hat.rows, kernel_hat.cols)) {
    throw DimensionError("convolve_with_spectrum: shape mismatch " + a.shape() + " vs " +
                         Image2D::shape_string(kernel_hat.rows, kernel_hat.cols));
  }
  HalfSpectrum fa = real_forward(a);
  for (std::size_t i = 0; i < fa.bins.size(); ++i) fa.bins[i] *= kernel_hat.bins[i];
  return real_inverse(std::move(fa));
}

/// Embed `img` centered in a zero field of the padded grid dimensions.
inline Image2D pad_center(const Image2D& img, const GridSpec& grid) {
  if (img.rows() > grid.pad_rows || img.cols() > grid.pad_cols) {
    throw DimensionError("pad_center: image " + img.shape() +
                         " does not fit padded grid " +
                         Image2D::shape_string(grid.pad_rows, grid.pad_cols));
  }
  Image2D out(grid.pad_rows, grid.pad_cols, 0.0);
  const std::size_t r0 = (grid.pad_rows - img.rows()) / 2;
  const std::size_t c0 = (grid.pad_cols - img.cols()) / 2;
  for (std::size_t r = 0; r < img.rows(); ++r) {
    for (std::size_t c = 0; c < img.cols(); ++c) out(r0 + r, c0 + c) = img(r, c);
  }
  return out;
}

/// Extract the central rows x cols window; inverse of pad_center.
inline Image2D crop_center(const Image2D& img, std::size_t rows, std::size_t cols) {
  if (rows > img.rows() || cols > img.cols()) {
    throw DimensionError("crop_center: target " + Image2D::shape_string(rows, cols) +
                         " exceeds source " + img.shape());
  }
  Image2D out(rows, cols);
  const std::size_t r0 = (img.rows() - rows) / 2;
  const std::size_t c0 = (img.cols() - cols) / 2;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = img(r0 + r, c0 + c);
  }
  return out;
}

/// (i, j) -> ((R - i) mod R, (C - j) mod C). Convolving with the flipped
/// kernel is the adjoint of convolving with the kernel.
inline Image2D flip_both_axes(const Image2D& img) {
  const std::size_t R = img.rows();
  const std::size_t C = img.cols();
  Image2D out(R, C);
  for (std::size_t i = 0; i < R; ++i) {
    for (std::size_t j = 0; j < C; ++j) out((R - i) % R, (C - j) % C) = img(i, j);
  }
  return out;
}

} // namespace diffecam
