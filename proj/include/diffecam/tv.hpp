#pragma once

#include <algorithm>
#include <cmath>

#include "image.hpp"

namespace diffecam {

/// Anisotropic total variation with periodic forward differences:
/// sum |x(i, j+1) - x(i, j)| + |x(i+1, j) - x(i, j)|.
inline double tv_norm(const Image2D& x) {
  const std::size_t R = x.rows();
  const std::size_t C = x.cols();
  double s = 0.0;
  for (std::size_t i = 0; i < R; ++i) {
    const std::size_t ip = (i + 1) % R;
    for (std::size_t j = 0; j < C; ++j) {
      const std::size_t jp = (j + 1) % C;
      s += std::abs(x(i, jp) - x(i, j)) + std::abs(x(ip, j) - x(i, j));
    }
  }
  return s;
}

namespace detail {

// z = x - w * D^T p, with D^T px (i, j) = px(i, j-1) - px(i, j) (periodic),
// and likewise along rows.
inline void primal_from_dual(const Image2D& x, const Image2D& px, const Image2D& py,
                             double w, Image2D& z) {
  const std::size_t R = x.rows();
  const std::size_t C = x.cols();
  for (std::size_t i = 0; i < R; ++i) {
    const std::size_t im = (i + R - 1) % R;
    for (std::size_t j = 0; j < C; ++j) {
      const std::size_t jm = (j + C - 1) % C;
      const double dt = px(i, jm) - px(i, j) + py(im, j) - py(i, j);
      z(i, j) = x(i, j) - w * dt;
    }
  }
}

} // namespace detail

/// Dual state of the TV prox, kept between calls to warm-start it.
struct TvDual {
  Image2D px, py;
  bool matches(const Image2D& x) const { return px.same_shape(x); }
};

/// Approximate minimizer of 0.5 ||z - x||^2 + weight * tv_norm(z).
///
/// Fast gradient projection on the box-constrained dual (Beck & Teboulle),
/// run for a fixed number of iterations from a zero dual, or from `warm` when
/// given (which is then updated in place). The final primal iterate is
/// returned unless x itself (or the warm-start point) scores better, so the
/// result never scores worse than the input.
inline Image2D tv_prox(const Image2D& x, double weight, std::size_t inner_iters,
                       TvDual* warm = nullptr) {
  if (weight < 0.0) throw ConfigError("tv_prox weight must be nonnegative");
  if (weight == 0.0 || inner_iters == 0) return x;

  const std::size_t R = x.rows();
  const std::size_t C = x.cols();
  auto objective = [&](const Image2D& z) {
    double d = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) d += (z[i] - x[i]) * (z[i] - x[i]);
    return 0.5 * d + weight * tv_norm(z);
  };

  TvDual local;
  TvDual& dual = warm ? *warm : local;
  if (!dual.matches(x)) {
    dual.px = Image2D(R, C, 0.0);
    dual.py = Image2D(R, C, 0.0);
  }
  Image2D& px = dual.px;
  Image2D& py = dual.py;
  Image2D qx = px, qy = py;               // extrapolated dual
  Image2D px_old = px, py_old = py;
  Image2D z(R, C);
  const double step = 1.0 / (8.0 * weight); // ||D||^2 <= 8
  double t = 1.0;

  Image2D best = x;
  double best_obj = objective(x);
  if (warm) {
    detail::primal_from_dual(x, px, py, weight, z);
    if (const double obj = objective(z); obj < best_obj) {
      best_obj = obj;
      best = z;
    }
  }

  for (std::size_t it = 0; it < inner_iters; ++it) {
    detail::primal_from_dual(x, qx, qy, weight, z);
    px_old = px;
    py_old = py;
    for (std::size_t i = 0; i < R; ++i) {
      const std::size_t ip = (i + 1) % R;
      for (std::size_t j = 0; j < C; ++j) {
        const std::size_t jp = (j + 1) % C;
        px(i, j) = std::clamp(qx(i, j) + step * (z(i, jp) - z(i, j)), -1.0, 1.0);
        py(i, j) = std::clamp(qy(i, j) + step * (z(ip, j) - z(i, j)), -1.0, 1.0);
      }
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double m = (t - 1.0) / t_next;
    for (std::size_t i = 0; i < px.size(); ++i) {
      qx[i] = px[i] + m * (px[i] - px_old[i]);
      qy[i] = py[i] + m * (py[i] - py_old[i]);
    }
    t = t_next;
  }
  detail::primal_from_dual(x, px, py, weight, z);
  if (objective(z) < best_obj) return z;
  return best;
}

} // namespace diffecam
