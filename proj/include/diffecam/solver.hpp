#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "convolution.hpp"
#include "diffuser_sim.hpp"
#include "edge_model.hpp"
#include "fft.hpp"
#include "image.hpp"
#include "tv.hpp"

namespace diffecam {

/// Sparsifying penalty: anisotropic total variation, or the plain l1 norm of
/// the estimate (for images that are themselves sparse, such as edge maps).
enum class Regularizer { tv, l1 };

struct SolveConfig {
  std::optional<double> tau;        ///< unset: 0.01 * max|A^T y|
  Regularizer regularizer = Regularizer::tv;
  std::size_t max_iters = 200;
  double rel_tol = 1e-4;
  double twist_alpha = 1.9;
  std::optional<double> twist_beta; ///< unset: derived from twist_alpha
  bool nonneg = true;
  std::size_t tv_inner_iters = 10;

  void validate() const {
    if (tau && !(*tau > 0.0 && std::isfinite(*tau))) {
      throw ConfigError("tau must be positive");
    }
    if (max_iters < 1) throw ConfigError("max_iters must be at least 1");
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw ConfigError("rel_tol must lie in (0, 1)");
    if (!(twist_alpha > 0.0 && twist_alpha < 2.0)) {
      throw ConfigError("twist_alpha must lie in (0, 2)");
    }
    if (twist_beta && !(*twist_beta > 0.0 && *twist_beta < 2.0 * twist_alpha)) {
      throw ConfigError("twist_beta must lie in (0, 2 * twist_alpha)");
    }
  }

  /// Two-step coefficients are tied through the smallest eigenvalue bound xi
  /// of the normalized A^T A: alpha = 1 + rho^2 with
  /// rho = (1 - sqrt(xi)) / (1 + sqrt(xi)), and beta = 2 alpha / (1 + xi).
  double beta() const {
    if (twist_beta) return *twist_beta;
    const double rho = std::sqrt(twist_alpha - 1.0);
    const double sqrt_xi = (1.0 - rho) / (1.0 + rho);
    return 2.0 * twist_alpha / (1.0 + sqrt_xi * sqrt_xi);
  }
};

struct SolveResult {
  Image2D estimate;
  std::vector<double> objective_trace; ///< entry 0 is the starting point
  std::size_t iterations = 0;
  bool converged = false;
  double tau = 0.0;                    ///< regularization weight actually used
};

/// Masked circular convolution y = S (K * x). K need not be a valid PSF: the
/// modified edge model uses a signed kernel.
class ConvolutionOperator {
public:
  ConvolutionOperator(const Image2D& kernel, Mask mask)
      : mask_(std::move(mask)),
        kernel_hat_(real_forward(kernel)),
        adjoint_hat_(real_forward(flip_both_axes(kernel))) {
    require_same_shape(kernel, mask_, "convolution operator");
    for (const auto& b : kernel_hat_.bins) norm_ = std::max(norm_, std::abs(b));
    if (!(norm_ > 0.0)) throw NumericalError("convolution kernel is identically zero");
  }

  explicit ConvolutionOperator(const ForwardModel& model)
      : ConvolutionOperator(model.psf, model.mask) {}

  Image2D apply(const Image2D& x) const {
    return apply_mask(convolve_with_spectrum(x, kernel_hat_), mask_);
  }

  /// A^T r: zero-fill unsampled pixels, then correlate with the kernel.
  Image2D adjoint(const Image2D& r) const {
    return convolve_with_spectrum(apply_mask(r, mask_), adjoint_hat_);
  }

  /// Spectral norm bound: max |K^|.
  double norm() const { return norm_; }
  const Mask& mask() const { return mask_; }
  std::size_t rows() const { return mask_.rows(); }
  std::size_t cols() const { return mask_.cols(); }

private:
  Mask mask_;
  HalfSpectrum kernel_hat_;
  HalfSpectrum adjoint_hat_;
  double norm_ = 0.0;
};

inline double data_term(const Image2D& x, const Image2D& y, const ConvolutionOperator& A) {
  const Image2D ax = A.apply(x);
  double s = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) {
    if (A.mask()[i]) s += (y[i] - ax[i]) * (y[i] - ax[i]);
  }
  return s;
}

/// Gradient of ||S (y - A x)||^2, i.e. 2 A^T (A x - y).
inline Image2D data_gradient(const Image2D& x, const Image2D& y, const ConvolutionOperator& A) {
  Image2D r = A.apply(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = 2.0 * (r[i] - y[i]);
  return A.adjoint(r);
}

inline double l1_norm(const Image2D& x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

inline double penalty(const Image2D& x, Regularizer reg) {
  return reg == Regularizer::tv ? tv_norm(x) : l1_norm(x);
}

/// Soft thresholding, the exact prox of weight * ||.||_1.
inline Image2D soft_threshold(const Image2D& x, double weight) {
  Image2D out = x;
  for (double& v : out) v = v > weight ? v - weight : (v < -weight ? v + weight : 0.0);
  return out;
}

/// ||S (y - A x)||^2 + tau * penalty(x).
inline double objective(const Image2D& x, const Image2D& y, const ConvolutionOperator& A,
                        double tau, Regularizer reg = Regularizer::tv) {
  require_same_shape(x, y, "objective");
  if (!x.same_shape(A.rows(), A.cols())) {
    throw DimensionError("objective: estimate " + x.shape() + " does not match model " +
                         Image2D::shape_string(A.rows(), A.cols()));
  }
  return data_term(x, y, A) + tau * penalty(x, reg);
}

inline double objective(const Image2D& x, const Image2D& y, const ForwardModel& model,
                        double tau, Regularizer reg = Regularizer::tv) {
  return objective(x, y, ConvolutionOperator(model), tau, reg);
}

/// Default regularization weight: 0.01 * max |A^T y|.
inline double default_tau(const Image2D& y, const ConvolutionOperator& A) {
  const double m = max_abs(A.adjoint(y));
  return m > 0.0 ? 0.01 * m : 1e-12;
}

/// Two-step iterative shrinkage/thresholding for
///   min_x ||S (y - A x)||^2 + tau * TV(x)   [x >= 0 if config.nonneg].
///
/// Denoising step: Gamma(x) = prox_{mu tau/2 TV}(x + mu A^T (y - A x)) with
/// mu = 1 / ||A||^2, followed by the optional projection. Iterates
///   x+ = (1 - alpha) x- + (alpha - beta) x + beta Gamma(x)
/// and falls back to the plain step Gamma(x) whenever the two-step update
/// would raise the objective; if that also fails to descend, the solve stops.
inline SolveResult twist_reconstruct(const Image2D& y, const ConvolutionOperator& A,
                                     const SolveConfig& config) {
  config.validate();
  if (!y.same_shape(A.rows(), A.cols())) {
    throw DimensionError("measurement " + y.shape() + " does not match model " +
                         Image2D::shape_string(A.rows(), A.cols()));
  }
  const Image2D ym = apply_mask(y, A.mask());
  for (double v : ym) {
    if (!std::isfinite(v)) throw NumericalError("measurement contains non-finite values");
  }

  SolveResult result;
  result.tau = config.tau ? *config.tau : default_tau(ym, A);
  const double mu = 1.0 / (A.norm() * A.norm());
  const double prox_weight = mu * result.tau / 2.0;
  const double alpha = config.twist_alpha;
  const double beta = config.beta();

  auto project = [&](Image2D& x) {
    if (!config.nonneg) return;
    for (double& v : x) v = std::max(v, 0.0);
  };
  auto eval = [&](const Image2D& x, std::size_t iter) {
    const double f = objective(x, ym, A, result.tau, config.regularizer);
    if (!std::isfinite(f)) {
      throw NumericalError("objective became non-finite at iteration " + std::to_string(iter));
    }
    return f;
  };
  TvDual dual;
  auto denoise_step = [&](const Image2D& x, std::size_t inner) {
    Image2D r = A.apply(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = ym[i] - r[i];
    const Image2D g = A.adjoint(r);
    Image2D v = x;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += mu * g[i];
    Image2D z = config.regularizer == Regularizer::tv
                    ? tv_prox(v, prox_weight, inner, &dual)
                    : soft_threshold(v, prox_weight);
    project(z);
    return z;
  };

  Image2D x(A.rows(), A.cols(), 0.0);
  double f = eval(x, 0);
  result.objective_trace.push_back(f);

  Image2D x_prev = x;
  bool first = true;
  for (std::size_t k = 1; k <= config.max_iters; ++k) {
    Image2D gamma = denoise_step(x, config.tv_inner_iters);
    Image2D candidate;
    double f_candidate;
    if (first) {
      candidate = std::move(gamma);
      f_candidate = eval(candidate, k);
      first = false;
    } else {
      candidate = Image2D(x.rows(), x.cols());
      for (std::size_t i = 0; i < x.size(); ++i) {
        candidate[i] = (1.0 - alpha) * x_prev[i] + (alpha - beta) * x[i] + beta * gamma[i];
      }
      project(candidate);
      f_candidate = eval(candidate, k);
      if (f_candidate > f) {
        candidate = std::move(gamma);
        f_candidate = eval(candidate, k);
      }
    }
    if (f_candidate > f && config.regularizer == Regularizer::tv) {
      // inexact prox: retry the plain step with a more accurate inner solve
      candidate = denoise_step(x, 4 * config.tv_inner_iters);
      f_candidate = eval(candidate, k);
    }
    if (f_candidate > f) {
      // no descent from either step: x is as good as this scheme gets
      result.converged = true;
      break;
    }
    x_prev = std::move(x);
    x = std::move(candidate);
    const double f_old = f;
    f = f_candidate;
    result.objective_trace.push_back(f);
    result.iterations = k;
    if (f_old - f <= config.rel_tol * f_old) {
      result.converged = true;
      break;
    }
  }
  result.estimate = std::move(x);
  return result;
}

inline SolveResult twist_reconstruct(const Image2D& y, const ForwardModel& model,
                                     const SolveConfig& config) {
  return twist_reconstruct(y, ConvolutionOperator(model), config);
}

/// Baseline path: recover the object itself through the original PSF.
inline SolveResult reconstruct_object(const Image2D& y, const ForwardModel& model,
                                      const SolveConfig& config) {
  model.validate();
  return twist_reconstruct(y, ConvolutionOperator(model), config);
}

/// Subtract the mean over sampled pixels from the sampled pixels of y.
inline Image2D remove_masked_mean(const Image2D& y, const Mask& mask) {
  require_same_shape(y, mask, "remove_masked_mean");
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (mask[i]) {
      total += y[i];
      ++n;
    }
  }
  Image2D out = apply_mask(y, mask);
  if (n == 0) return out;
  const double mean = total / static_cast<double>(n);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask[i]) out[i] -= mean;
  }
  return out;
}

/// Edge path: recover R * x directly through the modified PSF.
///
/// A DC-free stencil has no response at zero frequency, so the modified model
/// cannot explain the measurement's mean level; fitting it anyway smears it
/// over the whole estimate. The masked mean is removed before solving.
inline SolveResult reconstruct_edges(const Image2D& y, const ForwardModel& model,
                                     const EdgeKernel& kernel, const InverseSpec& inverse,
                                     const SolveConfig& config) {
  model.validate();
  const Image2D p_mod = modified_psf(model.psf, kernel, inverse);
  const Image2D y_dc = kernel.tap_sum() == 0.0 ? remove_masked_mean(y, model.mask) : y;
  return twist_reconstruct(y_dc, ConvolutionOperator(p_mod, model.mask), config);
}

} // namespace diffecam
