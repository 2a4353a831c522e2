#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "image.hpp"

namespace diffecam {

namespace detail {

// FFTW planning is not thread-safe, execution on fresh arrays is. Plans are
// created once per (rows, cols, direction) under a lock and then shared.
class PlanCache {
public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  enum Kind : int { complex_forward, complex_backward, real_forward, real_backward };

  fftw_plan get(std::size_t rows, std::size_t cols, Kind kind) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(rows, cols, static_cast<int>(kind));
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const int r = static_cast<int>(rows);
    const int c = static_cast<int>(cols);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::vector<std::complex<double>> cbuf(rows * cols), cbuf2(rows * cols);
    std::vector<double> rbuf(rows * cols);
    auto* cin = reinterpret_cast<fftw_complex*>(cbuf.data());
    auto* cout = reinterpret_cast<fftw_complex*>(cbuf2.data());
    fftw_plan plan = nullptr;
    switch (kind) {
    case complex_forward: plan = fftw_plan_dft_2d(r, c, cin, cout, FFTW_FORWARD, flags); break;
    case complex_backward: plan = fftw_plan_dft_2d(r, c, cin, cout, FFTW_BACKWARD, flags); break;
    case real_forward: plan = fftw_plan_dft_r2c_2d(r, c, rbuf.data(), cout, flags); break;
    case real_backward: plan = fftw_plan_dft_c2r_2d(r, c, cin, rbuf.data(), flags); break;
    }
    if (!plan) throw NumericalError("FFTW could not plan a transform");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

inline void execute(const FrequencyField& in, FrequencyField& out, int sign) {
  fftw_plan plan = PlanCache::instance().get(
      in.rows(), in.cols(),
      sign == FFTW_FORWARD ? PlanCache::complex_forward : PlanCache::complex_backward);
  // fftw_execute_dft takes non-const input but leaves it untouched for
  // out-of-place plans.
  fftw_execute_dft(plan,
                   reinterpret_cast<fftw_complex*>(
                       const_cast<std::complex<double>*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

} // namespace detail

/// Non-redundant half of the spectrum of a real raster: rows x (cols/2 + 1)
/// bins. Used internally for convolution, where only products are needed.
struct HalfSpectrum {
  std::size_t rows = 0;
  std::size_t cols = 0; ///< spatial column count
  std::vector<std::complex<double>> bins;
};

inline HalfSpectrum real_forward(const Image2D& img) {
  HalfSpectrum out{img.rows(), img.cols(),
                   std::vector<std::complex<double>>(img.rows() * (img.cols() / 2 + 1))};
  fftw_plan plan =
      detail::PlanCache::instance().get(img.rows(), img.cols(), detail::PlanCache::real_forward);
  fftw_execute_dft_r2c(plan, const_cast<double*>(img.data()),
                       reinterpret_cast<fftw_complex*>(out.bins.data()));
  return out;
}

/// Inverse of real_forward, divided by the pixel count. Consumes its argument
/// (FFTW overwrites the input of complex-to-real transforms).
inline Image2D real_inverse(HalfSpectrum spec) {
  Image2D out(spec.rows, spec.cols);
  fftw_plan plan =
      detail::PlanCache::instance().get(spec.rows, spec.cols, detail::PlanCache::real_backward);
  fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(spec.bins.data()), out.data());
  const double scale = 1.0 / static_cast<double>(out.size());
  for (double& v : out) v *= scale;
  return out;
}

/// Unnormalized forward DFT, DC at (0,0).
inline FrequencyField forward_transform(const FrequencyField& field) {
  FrequencyField out(field.rows(), field.cols());
  detail::execute(field, out, FFTW_FORWARD);
  return out;
}

inline FrequencyField forward_transform(const Image2D& img) {
  FrequencyField in(img.rows(), img.cols());
  for (std::size_t i = 0; i < img.size(); ++i) in[i] = img[i];
  return forward_transform(in);
}

/// Inverse DFT divided by the pixel count.
inline FrequencyField inverse_transform(const FrequencyField& field) {
  FrequencyField out(field.rows(), field.cols());
  detail::execute(field, out, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(field.size());
  for (auto& v : out) v *= scale;
  return out;
}

/// Real part of the inverse transform; the caller asserts the imaginary part is
/// round-off.
inline Image2D inverse_transform_real(const FrequencyField& field) {
  const FrequencyField spatial = inverse_transform(field);
  Image2D out(field.rows(), field.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = spatial[i].real();
  return out;
}

inline double max_abs(const FrequencyField& field) {
  double m = 0.0;
  for (const auto& v : field) m = std::max(m, std::abs(v));
  return m;
}

} // namespace diffecam
