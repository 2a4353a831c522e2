#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "convolution.hpp"
#include "fft.hpp"
#include "image.hpp"
#include "random.hpp"

namespace diffecam {

/// Parameters of the synthetic speckle PSF.
struct PsfParams {
  std::uint64_t seed = 1;
  double grain_sigma = 1.0; ///< Gaussian low-pass width in pixels (speckle grain size)
  double density = 0.1;     ///< fraction of brightest speckle pixels kept
  GridSpec grid = GridSpec::with_default_padding(128, 128);

  void validate() const {
    grid.validate();
    if (!(grain_sigma > 0.0) || !std::isfinite(grain_sigma)) {
      throw ConfigError("psf grain_sigma must be positive");
    }
    if (!(density > 0.0 && density <= 1.0)) {
      throw ConfigError("psf density must lie in (0, 1]");
    }
    const double retained = density * static_cast<double>(grid.pad_rows * grid.pad_cols);
    if (retained < 16.0) {
      throw ConfigError("psf too sparse: only " + std::to_string(retained) +
                        " speckle pixels retained, need at least 16");
    }
  }
};

/// Gaussian transfer function with periodic frequency coordinates.
inline FrequencyField gaussian_lowpass_response(std::size_t rows, std::size_t cols,
                                                double sigma) {
  FrequencyField h(rows, cols);
  const double k = 2.0 * std::numbers::pi * std::numbers::pi * sigma * sigma;
  for (std::size_t u = 0; u < rows; ++u) {
    const double fu = (u <= rows / 2 ? double(u) : double(u) - double(rows)) / double(rows);
    for (std::size_t v = 0; v < cols; ++v) {
      const double fv =
          (v <= cols / 2 ? double(v) : double(v) - double(cols)) / double(cols);
      h(u, v) = std::exp(-k * (fu * fu + fv * fv));
    }
  }
  return h;
}

/// Scale a nonnegative raster to unit sum.
inline Image2D normalize_psf(Image2D psf) {
  double total = 0.0;
  for (double v : psf) {
    if (v < 0.0 || !std::isfinite(v)) {
      throw ConfigError("psf must be finite and nonnegative");
    }
    total += v;
  }
  if (!(total > 0.0)) throw NumericalError("psf is identically zero");
  for (double& v : psf) v /= total;
  return psf;
}

/// Seeded uniform noise, low-passed to the grain size, thresholded to keep the
/// brightest `density` fraction, normalized to unit sum. Lives on the padded grid.
inline Image2D synthesize_psf(const PsfParams& params) {
  params.validate();
  const std::size_t R = params.grid.pad_rows;
  const std::size_t C = params.grid.pad_cols;

  Rng rng(params.seed);
  Image2D noise(R, C);
  for (double& v : noise) v = rng.uniform();

  FrequencyField spec = forward_transform(noise);
  const FrequencyField lp = gaussian_lowpass_response(R, C, params.grain_sigma);
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= lp[i];
  Image2D smooth = inverse_transform_real(spec);

  if (params.density < 1.0) {
    std::vector<double> sorted(smooth.begin(), smooth.end());
    const auto keep = static_cast<std::size_t>(
        std::llround(params.density * static_cast<double>(sorted.size())));
    const std::size_t cut = sorted.size() - std::max<std::size_t>(keep, 1);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(cut),
                     sorted.end());
    const double threshold = sorted[cut];
    for (double& v : smooth) {
      if (v < threshold) v = 0.0;
    }
  }
  // Smoothing of positive noise stays positive up to round-off.
  for (double& v : smooth) v = std::max(v, 0.0);
  return normalize_psf(std::move(smooth));
}

/// PSF and sampling mask on the padded grid: y = S (P * x).
struct ForwardModel {
  Image2D psf;
  Mask mask;
  GridSpec grid;

  void validate() const {
    grid.validate();
    if (!psf.same_shape(grid.pad_rows, grid.pad_cols)) {
      throw DimensionError("psf " + psf.shape() + " does not match padded grid " +
                           Image2D::shape_string(grid.pad_rows, grid.pad_cols));
    }
    require_same_shape(psf, mask, "forward model psf/mask");
    double total = 0.0;
    for (double v : psf) {
      if (v < 0.0) throw ConfigError("forward model psf has negative entries");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw ConfigError("forward model psf must sum to 1, got " + std::to_string(total));
    }
  }
};

inline Mask full_mask(const GridSpec& grid) {
  return Mask(grid.pad_rows, grid.pad_cols, 1);
}

inline ForwardModel make_forward_model(Image2D psf, Mask mask, const GridSpec& grid) {
  ForwardModel m{std::move(psf), std::move(mask), grid};
  m.validate();
  return m;
}

struct NoiseSpec {
  enum class Kind { none, gaussian };
  Kind kind = Kind::none;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
      throw ConfigError("noise sigma must be nonnegative");
    }
  }
  bool active() const { return kind == Kind::gaussian && sigma > 0.0; }
};

/// Uniformly random subset of exactly round(rate * pixels) measurement pixels.
inline Mask make_sampling_mask(const GridSpec& grid, double rate, std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw ConfigError("sampling rate must lie in (0, 1], got " + std::to_string(rate));
  }
  const std::size_t n = grid.pad_rows * grid.pad_cols;
  const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  Mask mask(grid.pad_rows, grid.pad_cols, 0);
  if (k >= n) {
    std::fill(mask.begin(), mask.end(), std::uint8_t{1});
    return mask;
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  // partial Fisher-Yates: the first k slots are a uniform k-subset
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
    mask[idx[i]] = 1;
  }
  return mask;
}

inline Image2D to_padded(const Image2D& obj, const GridSpec& grid) {
  if (obj.same_shape(grid.pad_rows, grid.pad_cols)) return obj;
  if (obj.same_shape(grid.rows, grid.cols)) return pad_center(obj, grid);
  throw DimensionError("object " + obj.shape() + " matches neither working grid " +
                       Image2D::shape_string(grid.rows, grid.cols) + " nor padded grid " +
                       Image2D::shape_string(grid.pad_rows, grid.pad_cols));
}

inline void add_noise(Image2D& img, const NoiseSpec& noise) {
  noise.validate();
  if (!noise.active()) return;
  Rng rng(noise.seed);
  for (double& v : img) v += noise.sigma * rng.gaussian();
}

/// mask o (obj * psf + noise). `obj` may be given on the working grid (it is
/// center-padded) or directly on the padded grid.
inline Image2D simulate_measurement(const Image2D& obj, const ForwardModel& model,
                                    const NoiseSpec& noise = {}) {
  model.validate();
  const Image2D x = to_padded(obj, model.grid);
  for (double v : x) {
    if (v < 0.0) throw ConfigError("object intensities must be nonnegative");
  }
  Image2D y = circular_convolve(x, model.psf);
  add_noise(y, noise);
  return apply_mask(y, model.mask);
}

} // namespace diffecam
