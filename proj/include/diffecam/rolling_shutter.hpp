#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "convolution.hpp"
#include "diffuser_sim.hpp"
#include "image.hpp"

namespace diffecam {

/// Rolling-shutter readout: row r starts exposing at r * line_time. Rows are
/// split into n_frames contiguous bands, each band seeing one scene state
/// stamped at the start time of its first row. Remainder rows go to the last
/// band.
struct ShutterTimeline {
  std::size_t n_rows = 256;
  double line_time = 8.5 / 32.0; ///< ms between successive row starts
  double exposure_time = 4.0;    ///< ms each row integrates
  std::size_t n_frames = 8;

  void validate() const {
    if (n_frames == 0) throw ConfigError("timeline needs at least one frame");
    if (n_rows < n_frames) {
      throw ConfigError("timeline has fewer rows (" + std::to_string(n_rows) +
                        ") than frames (" + std::to_string(n_frames) + ")");
    }
    if (!(line_time > 0.0) || !std::isfinite(line_time)) {
      throw ConfigError("line_time must be positive");
    }
    if (!(exposure_time > 0.0) || !std::isfinite(exposure_time)) {
      throw ConfigError("exposure_time must be positive");
    }
  }

  std::size_t band_height() const { return n_rows / n_frames; }

  /// Half-open row range [first, last) of band k.
  std::pair<std::size_t, std::size_t> band_rows(std::size_t k) const {
    if (k >= n_frames) throw ConfigError("band index out of range");
    const std::size_t b = band_height();
    const std::size_t first = k * b;
    const std::size_t last = (k + 1 == n_frames) ? n_rows : first + b;
    return {first, last};
  }

  std::size_t band_of_row(std::size_t r) const {
    return std::min(r / band_height(), n_frames - 1);
  }

  double frame_time(std::size_t k) const {
    return static_cast<double>(k * band_height()) * line_time;
  }

  std::vector<double> frame_times() const {
    validate();
    std::vector<double> t(n_frames);
    for (std::size_t k = 0; k < n_frames; ++k) t[k] = frame_time(k);
    return t;
  }
};

/// Rigid lateral translation of a base object.
struct MotionModel {
  Image2D base_object;
  double velocity_x = 0.0; ///< columns per ms
  double velocity_y = 0.0; ///< rows per ms
};

/// Translate by (dx, dy) pixels with bilinear splatting. Every source pixel
/// distributes its value over at most four targets with weights summing to 1,
/// so pixel mass and the centroid shift are exact.
inline Image2D translate_bilinear(const Image2D& src, double dx, double dy) {
  const double fx_floor = std::floor(dx);
  const double fy_floor = std::floor(dy);
  const double fx = dx - fx_floor;
  const double fy = dy - fy_floor;
  const auto ix = static_cast<long long>(fx_floor);
  const auto iy = static_cast<long long>(fy_floor);
  const auto R = static_cast<long long>(src.rows());
  const auto C = static_cast<long long>(src.cols());

  const double w[2][2] = {{(1 - fy) * (1 - fx), (1 - fy) * fx},
                          {fy * (1 - fx), fy * fx}};

  Image2D out(src.rows(), src.cols(), 0.0);
  for (long long r = 0; r < R; ++r) {
    for (long long c = 0; c < C; ++c) {
      const double v = src(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      if (v == 0.0) continue;
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          if (w[a][b] == 0.0) continue;
          const long long tr = r + iy + a;
          const long long tc = c + ix + b;
          if (tr < 0 || tr >= R || tc < 0 || tc >= C) {
            throw ConfigError("object leaves the working grid under translation (" +
                              std::to_string(dx) + ", " + std::to_string(dy) + ")");
          }
          out(static_cast<std::size_t>(tr), static_cast<std::size_t>(tc)) += w[a][b] * v;
        }
      }
    }
  }
  return out;
}

/// Scene state at time t (ms): base object shifted by velocity * t.
inline Image2D render_frame(const MotionModel& motion, double t) {
  if (t == 0.0) return motion.base_object;
  return translate_bilinear(motion.base_object, motion.velocity_x * t,
                            motion.velocity_y * t);
}

/// Single-shot rolling-shutter encoding: the rows of band k come from the
/// static measurement of frame k. Mask and noise are applied once to the
/// assembled measurement.
inline Image2D simulate_rolling_shutter(const MotionModel& motion,
                                        const ForwardModel& model,
                                        const ShutterTimeline& timeline,
                                        const NoiseSpec& noise = {}) {
  model.validate();
  timeline.validate();
  if (timeline.n_rows != model.grid.pad_rows) {
    throw DimensionError("timeline rows " + std::to_string(timeline.n_rows) +
                         " do not match measurement rows " +
                         std::to_string(model.grid.pad_rows));
  }
  if (!motion.base_object.same_shape(model.grid.rows, model.grid.cols)) {
    throw DimensionError("moving object " + motion.base_object.shape() +
                         " does not match working grid " +
                         Image2D::shape_string(model.grid.rows, model.grid.cols));
  }

  Image2D y(model.grid.pad_rows, model.grid.pad_cols, 0.0);
  for (std::size_t k = 0; k < timeline.n_frames; ++k) {
    const Image2D frame = render_frame(motion, timeline.frame_time(k));
    for (double v : frame) {
      if (v < 0.0) throw ConfigError("object intensities must be nonnegative");
    }
    const Image2D band_meas = circular_convolve(pad_center(frame, model.grid), model.psf);
    const auto [first, last] = timeline.band_rows(k);
    for (std::size_t r = first; r < last; ++r) {
      const auto src = band_meas.row(r);
      std::copy(src.begin(), src.end(), y.row(r).begin());
    }
  }
  add_noise(y, noise);
  return apply_mask(y, model.mask);
}

/// Restrict a sampling mask to the rows of band k.
inline Mask band_mask(const Mask& mask, const ShutterTimeline& timeline, std::size_t k) {
  if (mask.rows() != timeline.n_rows) {
    throw DimensionError("mask rows do not match timeline rows");
  }
  Mask out(mask.rows(), mask.cols(), 0);
  const auto [first, last] = timeline.band_rows(k);
  for (std::size_t r = first; r < last; ++r) {
    for (std::size_t c = 0; c < mask.cols(); ++c) out(r, c) = mask(r, c);
  }
  return out;
}

} // namespace diffecam
