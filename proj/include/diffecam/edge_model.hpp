#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <string>

#include "convolution.hpp"
#include "fft.hpp"
#include "image.hpp"

namespace diffecam {

/// 3x3 stencil applied by periodic convolution with its center at the grid
/// origin.
struct EdgeKernel {
  std::array<std::array<double, 3>, 3> taps{};

  double tap_sum() const {
    double s = 0.0;
    for (const auto& row : taps)
      for (double t : row) s += t;
    return s;
  }

  /// Parse nine whitespace-separated reals, row-major.
  static EdgeKernel parse(const std::string& text) {
    std::istringstream in(text);
    EdgeKernel k;
    for (auto& row : k.taps) {
      for (double& t : row) {
        if (!(in >> t)) throw ConfigError("edge kernel needs nine reals, got '" + text + "'");
      }
    }
    std::string extra;
    if (in >> extra) throw ConfigError("edge kernel has more than nine values: '" + text + "'");
    return k;
  }

  std::string to_string() const {
    std::ostringstream out;
    out.precision(17);
    bool first = true;
    for (const auto& row : taps) {
      for (double t : row) {
        if (!first) out << ' ';
        out << t;
        first = false;
      }
    }
    return out.str();
  }

  friend bool operator==(const EdgeKernel&, const EdgeKernel&) = default;
};

/// Diagonal first-difference stencil
///    0 -1  0
///   -1  0  1
///    0  1  0
inline EdgeKernel edge_kernel_default() {
  return EdgeKernel{{{{0.0, -1.0, 0.0}, {-1.0, 0.0, 1.0}, {0.0, 1.0, 0.0}}}};
}

/// Identity stencil; useful as a control for the modified-model algebra.
inline EdgeKernel edge_kernel_identity() {
  return EdgeKernel{{{{0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 0.0}}}};
}

inline EdgeKernel edge_kernel_laplacian() {
  return EdgeKernel{{{{0.0, 1.0, 0.0}, {1.0, -4.0, 1.0}, {0.0, 1.0, 0.0}}}};
}

/// The stencil as a full raster with tap (r, c) at ((r - 1) mod R, (c - 1) mod C).
inline Image2D embed_kernel(const EdgeKernel& k, std::size_t rows, std::size_t cols) {
  if (rows < 3 || cols < 3) {
    throw DimensionError("edge kernel needs a grid of at least 3x3, got " +
                         Image2D::shape_string(rows, cols));
  }
  Image2D out(rows, cols, 0.0);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      out((r + rows - 1) % rows, (c + cols - 1) % cols) += k.taps[r][c];
    }
  }
  return out;
}

/// Periodic convolution of obj with the centered stencil; signed output.
inline Image2D apply_edge_operator(const Image2D& obj, const EdgeKernel& k) {
  return circular_convolve(obj, embed_kernel(k, obj.rows(), obj.cols()));
}

/// Spectrum of the centered stencil on the padded grid. For the default
/// kernel this is -2i (sin(2 pi u / M) + sin(2 pi v / N)).
inline FrequencyField kernel_frequency_response(const EdgeKernel& k, const GridSpec& grid) {
  return forward_transform(embed_kernel(k, grid.pad_rows, grid.pad_cols));
}

/// Tikhonov-regularized inverse of a kernel spectrum.
struct InverseSpec {
  double epsilon = 1e-3; ///< relative to max |H|^2

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw ConfigError("inverse epsilon must be positive");
    }
  }
};

/// conj(H) / (|H|^2 + eps * max|H|^2), finite on the zero set of H.
inline FrequencyField regularized_inverse_response(const FrequencyField& H,
                                                   const InverseSpec& spec) {
  spec.validate();
  double peak2 = 0.0;
  for (const auto& h : H) peak2 = std::max(peak2, std::norm(h));
  if (!(peak2 > 0.0)) {
    throw NumericalError("kernel response is identically zero; nothing to invert");
  }
  const double floor = spec.epsilon * peak2;
  FrequencyField out(H.rows(), H.cols());
  for (std::size_t i = 0; i < H.size(); ++i) {
    out[i] = std::conj(H[i]) / (std::norm(H[i]) + floor);
  }
  return out;
}

/// PSF of the modified model A' = A R^-1: inverse transform of P^ . reg_inv(H).
/// Convolving the result with an edge image reproduces the original model on
/// every frequency where H is well away from zero.
inline Image2D modified_psf(const Image2D& psf, const EdgeKernel& k, const InverseSpec& spec) {
  const FrequencyField H = forward_transform(embed_kernel(k, psf.rows(), psf.cols()));
  const FrequencyField inv = regularized_inverse_response(H, spec);
  FrequencyField p_hat = forward_transform(psf);
  for (std::size_t i = 0; i < p_hat.size(); ++i) p_hat[i] *= inv[i];

  const FrequencyField spatial = inverse_transform(p_hat);
  double peak = 0.0;
  double residue = 0.0;
  for (const auto& v : spatial) {
    peak = std::max(peak, std::abs(v.real()));
    residue = std::max(residue, std::abs(v.imag()));
  }
  if (residue > 1e-9 * std::max(peak, 1.0)) {
    throw NumericalError("modified psf has imaginary residue " + std::to_string(residue));
  }
  Image2D out(psf.rows(), psf.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = spatial[i].real();
  return out;
}

} // namespace diffecam
