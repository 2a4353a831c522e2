#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "config.hpp"
#include "convolution.hpp"
#include "diffuser_sim.hpp"
#include "edge_model.hpp"
#include "metrics.hpp"
#include "raster_io.hpp"
#include "rolling_shutter.hpp"
#include "shapes.hpp"
#include "solver.hpp"

namespace diffecam {

namespace fs = std::filesystem;

/// Stable per-run seed: hash of the global seed, the object name, the rate and
/// a purpose tag ("mask", "noise", ...).
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view object,
                                 double rate, std::string_view purpose) {
  std::uint64_t h = mix64(global_seed, fnv1a(object));
  h = mix64(h, std::bit_cast<std::uint64_t>(rate));
  return mix64(h, fnv1a(purpose));
}

/// Label used in reports: the built-in name, or the file stem for rasters.
inline std::string object_label(const std::string& source) {
  if (is_builtin_object(source)) return source;
  return fs::path(source).stem().string();
}

inline Image2D load_object(const std::string& source, const GridSpec& grid, double scale) {
  if (is_builtin_object(source)) return make_builtin_object(source, grid.rows, grid.cols, scale);
  Image2D obj = read_image(source);
  if (!obj.same_shape(grid.rows, grid.cols)) {
    throw DimensionError("object file '" + source + "' is " + obj.shape() +
                         ", working grid is " + Image2D::shape_string(grid.rows, grid.cols));
  }
  return obj;
}

/// The configured PSF: imported from psf_file (padded or working-grid size,
/// renormalized) or synthesized.
inline Image2D load_psf(const RunConfig& cfg) {
  const GridSpec grid = cfg.grid();
  if (cfg.psf_file.empty()) return synthesize_psf(cfg.psf_params());
  Image2D psf = read_image(cfg.psf_file);
  if (psf.same_shape(grid.rows, grid.cols) &&
      !psf.same_shape(grid.pad_rows, grid.pad_cols)) {
    psf = pad_center(psf, grid);
  }
  if (!psf.same_shape(grid.pad_rows, grid.pad_cols)) {
    throw DimensionError("psf file '" + cfg.psf_file + "' is " + psf.shape() +
                         ", expected " + Image2D::shape_string(grid.pad_rows, grid.pad_cols));
  }
  return normalize_psf(std::move(psf));
}

/// One simulated static acquisition.
struct Acquisition {
  Image2D object;      ///< working grid
  Image2D measurement; ///< padded grid, zero at unsampled pixels
  ForwardModel model;
};

inline Acquisition simulate_static(const RunConfig& cfg, const Image2D& psf,
                                   const std::string& object_source, double rate) {
  const GridSpec grid = cfg.grid();
  Acquisition a;
  a.object = load_object(object_source, grid, cfg.object_scale);
  const std::string label = object_label(object_source);
  a.model = make_forward_model(psf,
                               make_sampling_mask(grid, rate,
                                                  derive_seed(cfg.seed, label, rate, "mask")),
                               grid);
  NoiseSpec noise;
  if (cfg.noise_sigma > 0.0) {
    noise.kind = NoiseSpec::Kind::gaussian;
    noise.sigma = cfg.noise_sigma;
    noise.seed = derive_seed(cfg.seed, label, rate, "noise");
  }
  a.measurement = simulate_measurement(a.object, a.model, noise);
  return a;
}

/// Edge map recovered by one of the two methods, on the padded grid.
struct EdgeRecovery {
  Image2D edge;
  SolveResult solve; ///< for post_processing, the object solve
};

inline EdgeRecovery recover_edges(Method method, const Image2D& y, const ForwardModel& model,
                                  const RunConfig& cfg) {
  EdgeRecovery r;
  if (method == Method::diffuser_ecam) {
    r.solve = reconstruct_edges(y, model, cfg.kernel, cfg.inverse_spec(),
                                cfg.solve_config(true));
    r.edge = r.solve.estimate;
  } else {
    r.solve = reconstruct_object(y, model, cfg.solve_config(false));
    r.edge = apply_edge_operator(r.solve.estimate, cfg.kernel);
  }
  return r;
}

/// Score a working-grid edge estimate against the object's reference edge.
inline MetricsRecord score_edges(const Image2D& edge, const Image2D& object,
                                 const EdgeKernel& kernel, std::string object_id, Method method,
                                 double rate) {
  const Image2D i = quantize_8bit(edge);
  const Image2D k = reference_edge(object, kernel);
  MetricsRecord rec;
  rec.object_id = std::move(object_id);
  rec.method = method;
  rec.sampling_rate = rate;
  rec.mse = mse(i, k);
  rec.psnr_db = psnr(i, k);
  rec.ie_bits = information_entropy(i);
  return rec;
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory '" + dir.string() + "': " + ec.message());
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

/// key = value sidecar: the full config, its digest and scoring conventions.
inline std::vector<std::pair<std::string, std::string>> run_metadata(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> meta{
      {"config_digest", cfg.digest()},
      {"psnr", "10 log10(255^2 / mse) on min-max 8-bit images"},
      {"ie_bins", "256"},
      {"signed_edges", "min-max mapped, zero response lands mid-gray"},
      {"reference", "edge operator on the ground-truth object"},
  };
  for (const auto& e : cfg.entries()) {
    if (e.first != "out_dir" && e.first != "threads") meta.push_back(e);
  }
  return meta;
}

inline void write_metadata(const fs::path& path, const RunConfig& cfg,
                           std::vector<std::pair<std::string, std::string>> extra = {}) {
  MetricsReport report;
  report.metadata = run_metadata(cfg);
  report.metadata.insert(report.metadata.end(), extra.begin(), extra.end());
  std::ostringstream out;
  report.write_metadata(out);
  write_text(path, out.str());
}

/// Append one row to metrics.csv, writing the header for a new file.
inline void append_metrics(const fs::path& path, const MetricsRecord& rec) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (fresh) out << MetricsReport::csv_header << '\n';
  MetricsReport::write_row(out, rec);
  if (!out) throw Error("cannot append to '" + path.string() + "'");
}

/// Run fn(i) for i in [0, n) on up to `threads` workers (0: all cores).
inline void parallel_for(std::size_t n, std::size_t threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

// ---------------------------------------------------------------------------
// Commands. Each writes into cfg.out_dir and returns what it wrote.

struct PsfOutput {
  Image2D psf;
  fs::path raster;
};

inline PsfOutput cmd_psf(const RunConfig& cfg) {
  cfg.validate();
  const fs::path dir = cfg.out_dir;
  ensure_dir(dir);
  PsfOutput out{load_psf(cfg), dir / "psf.decr"};
  write_raster(out.psf, out.raster.string());
  write_pgm(out.psf, (dir / "psf.pgm").string());
  write_metadata(dir / "psf.meta", cfg);
  return out;
}

struct SimulateOutput {
  Acquisition acquisition;
  fs::path measurement, mask, object;
};

inline SimulateOutput cmd_simulate(const RunConfig& cfg) {
  cfg.validate();
  const fs::path dir = cfg.out_dir;
  ensure_dir(dir);
  SimulateOutput out{simulate_static(cfg, load_psf(cfg), cfg.object, cfg.rate),
                     dir / "measurement.decr", dir / "mask.decr", dir / "object.decr"};
  const Acquisition& a = out.acquisition;
  write_raster(a.measurement, out.measurement.string());
  write_raster(mask_to_image(a.model.mask), out.mask.string());
  write_raster(a.object, out.object.string());
  write_pgm(a.measurement, (dir / "measurement.pgm").string());
  write_metadata(dir / "simulate.meta", cfg,
                 {{"mask_seed", std::to_string(derive_seed(cfg.seed, object_label(cfg.object),
                                                           cfg.rate, "mask"))}});
  return out;
}

struct EdgeOutput {
  Image2D edge; ///< working grid
  SolveResult solve;
  MetricsRecord metrics;
  fs::path raster;
};

/// The acquisition for edge/baseline: loaded from files when a measurement is
/// configured, simulated otherwise. The object is loaded in both cases for
/// scoring.
inline Acquisition acquire(const RunConfig& cfg) {
  const Image2D psf = load_psf(cfg);
  if (cfg.measurement_file.empty()) return simulate_static(cfg, psf, cfg.object, cfg.rate);
  const GridSpec grid = cfg.grid();
  Acquisition a;
  a.object = load_object(cfg.object, grid, cfg.object_scale);
  a.measurement = read_image(cfg.measurement_file);
  const Mask mask = cfg.mask_file.empty() ? full_mask(grid)
                                          : image_to_mask(read_image(cfg.mask_file));
  a.model = make_forward_model(psf, mask, grid);
  if (!a.measurement.same_shape(grid.pad_rows, grid.pad_cols)) {
    throw DimensionError("measurement is " + a.measurement.shape() + ", expected " +
                         Image2D::shape_string(grid.pad_rows, grid.pad_cols));
  }
  return a;
}

inline EdgeOutput run_method(const RunConfig& cfg, Method method) {
  cfg.validate();
  const fs::path dir = cfg.out_dir;
  ensure_dir(dir);
  const Acquisition a = acquire(cfg);
  const GridSpec grid = cfg.grid();
  EdgeRecovery rec = recover_edges(method, a.measurement, a.model, cfg);

  EdgeOutput out;
  out.edge = crop_center(rec.edge, grid.rows, grid.cols);
  out.solve = std::move(rec.solve);
  out.metrics = score_edges(out.edge, a.object, cfg.kernel, object_label(cfg.object), method,
                            cfg.rate);
  const std::string stem = std::string("edge_") + method_name(method);
  out.raster = dir / (stem + ".decr");
  write_raster(out.edge, out.raster.string());
  write_pgm(out.edge, (dir / (stem + ".pgm")).string());
  if (method == Method::post_processing) {
    const Image2D obj = crop_center(out.solve.estimate, grid.rows, grid.cols);
    write_raster(obj, (dir / "object_estimate.decr").string());
    write_pgm(obj, (dir / "object_estimate.pgm").string());
  }
  append_metrics(dir / "metrics.csv", out.metrics);
  write_metadata(dir / "metrics.meta", cfg);
  return out;
}

inline EdgeOutput cmd_edge(const RunConfig& cfg) { return run_method(cfg, Method::diffuser_ecam); }

inline EdgeOutput cmd_baseline(const RunConfig& cfg) {
  return run_method(cfg, Method::post_processing);
}

struct SweepOutput {
  MetricsReport report;
  fs::path csv;
  std::vector<std::string> failures; ///< one message per failed sub-run
};

namespace detail {

inline std::string rate_tag(double rate) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", static_cast<int>(std::lround(rate * 100.0)));
  return buf;
}

// Tile equally sized 8-bit panels into a grid with a 2 px black gutter.
inline Image2D tile(const std::vector<std::vector<Image2D>>& panels, std::size_t rows,
                    std::size_t cols) {
  constexpr std::size_t gap = 2;
  const std::size_t nr = panels.size();
  const std::size_t nc = nr ? panels.front().size() : 0;
  Image2D out(nr * rows + (nr + 1) * gap, nc * cols + (nc + 1) * gap, 0.0);
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < nc; ++j) {
      const Image2D& p = panels[i][j];
      const std::size_t r0 = gap + i * (rows + gap);
      const std::size_t c0 = gap + j * (cols + gap);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out(r0 + r, c0 + c) = p(r, c);
    }
  }
  return out;
}

} // namespace detail

/// Sampling-rate sweep over cfg.objects x cfg.rates with both methods. Both
/// methods of an (object, rate) cell share one acquisition. Rows are ordered
/// by object, rate, method regardless of completion order.
inline SweepOutput cmd_sweep(const RunConfig& cfg) {
  cfg.validate();
  const fs::path dir = cfg.out_dir;
  const fs::path raster_dir = dir / "sweep";
  ensure_dir(raster_dir);
  const GridSpec grid = cfg.grid();
  const Image2D psf = load_psf(cfg);

  const std::size_t n_obj = cfg.objects.size();
  const std::size_t n_rate = cfg.rates.size();
  const std::size_t n_cells = n_obj * n_rate;
  constexpr Method methods[] = {Method::diffuser_ecam, Method::post_processing};
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<MetricsRecord> rows(2 * n_cells);
  std::vector<std::string> errors(2 * n_cells);
  std::vector<std::vector<Image2D>> panels(n_cells, std::vector<Image2D>(3));

  parallel_for(n_cells, cfg.threads, [&](std::size_t cell) {
    const std::string& source = cfg.objects[cell / n_rate];
    const std::string label = object_label(source);
    const double rate = cfg.rates[cell % n_rate];
    std::optional<Acquisition> acq;
    std::string acq_error;
    try {
      acq = simulate_static(cfg, psf, source, rate);
      panels[cell][0] = reference_edge(acq->object, cfg.kernel);
    } catch (const Error& e) {
      acq_error = e.what();
      panels[cell][0] = Image2D(grid.rows, grid.cols, 0.0);
    }
    for (std::size_t m = 0; m < 2; ++m) {
      MetricsRecord& rec = rows[2 * cell + m];
      rec = MetricsRecord{label, methods[m], rate, nan, nan, nan};
      panels[cell][m + 1] = Image2D(grid.rows, grid.cols, 0.0);
      if (!acq) {
        errors[2 * cell + m] = acq_error;
        continue;
      }
      try {
        const EdgeRecovery r = recover_edges(methods[m], acq->measurement, acq->model, cfg);
        const Image2D edge = crop_center(r.edge, grid.rows, grid.cols);
        rec = score_edges(edge, acq->object, cfg.kernel, label, methods[m], rate);
        write_raster(edge, (raster_dir / (label + "_" + detail::rate_tag(rate) + "_" +
                                          method_name(methods[m]) + ".decr"))
                               .string());
        panels[cell][m + 1] = quantize_8bit(edge);
      } catch (const Error& e) {
        errors[2 * cell + m] = e.what();
      }
    }
  });

  SweepOutput out;
  out.report.records = std::move(rows);
  out.report.metadata = run_metadata(cfg);
  out.report.metadata.emplace_back("data_seed",
                                   "hash(seed, object, rate); shared by both methods");
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i].empty()) continue;
    const auto& r = out.report.records[i];
    out.failures.push_back(r.object_id + " @ " + format_real(r.sampling_rate) + " (" +
                           method_name(r.method) + "): " + errors[i]);
  }
  for (std::size_t i = 0; i < out.failures.size(); ++i) {
    out.report.metadata.emplace_back("failure_" + std::to_string(i), out.failures[i]);
  }

  out.csv = dir / "sweep.csv";
  std::ostringstream csv;
  out.report.write_csv(csv);
  write_text(out.csv, csv.str());
  std::ostringstream meta;
  out.report.write_metadata(meta);
  write_text(dir / "sweep.meta", meta.str());

  // per-rate grids: one row per object, columns reference | diffuser_ecam | post_processing
  for (std::size_t ri = 0; ri < n_rate; ++ri) {
    std::vector<std::vector<Image2D>> grid_panels;
    for (std::size_t oi = 0; oi < n_obj; ++oi) grid_panels.push_back(panels[oi * n_rate + ri]);
    write_pgm(detail::tile(grid_panels, grid.rows, grid.cols),
              (dir / ("grid_rate_" + detail::rate_tag(cfg.rates[ri]) + ".pgm")).string());
  }
  return out;
}

/// Intensity-weighted centroid of |e| above a fraction of its peak, so the
/// low-level ringing spread over the whole field does not pull it to the
/// center. Returns (column, row).
inline std::pair<double, double> edge_centroid(const Image2D& e, double threshold = 0.25) {
  const double cut = threshold * max_abs(e);
  double w_sum = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t r = 0; r < e.rows(); ++r) {
    for (std::size_t c = 0; c < e.cols(); ++c) {
      const double w = std::abs(e(r, c)) - cut;
      if (w <= 0.0) continue;
      w_sum += w;
      cx += w * static_cast<double>(c);
      cy += w * static_cast<double>(r);
    }
  }
  if (!(w_sum > 0.0)) throw NumericalError("edge map is empty, centroid undefined");
  return {cx / w_sum, cy / w_sum};
}

struct RollingFrame {
  double time = 0.0;
  Image2D edge; ///< working grid
  double true_x = 0.0, true_y = 0.0;
  double centroid_x = 0.0, centroid_y = 0.0;
};

struct RollingOutput {
  Image2D measurement;
  ShutterTimeline timeline;
  std::vector<RollingFrame> frames;
  fs::path trajectory;
};

/// Rolling-shutter demo: one measurement of a moving object, one edge solve
/// per row band.
inline RollingOutput cmd_rolling(const RunConfig& cfg) {
  cfg.validate();
  const fs::path dir = cfg.out_dir;
  ensure_dir(dir);
  const GridSpec grid = cfg.grid();
  RollingOutput out;
  out.timeline = cfg.timeline();
  const ShutterTimeline& tl = out.timeline;

  // start so that the path is centered on the grid over the exposure window
  const double t_mid = 0.5 * (tl.frame_time(0) + tl.frame_time(tl.n_frames - 1));
  const Image2D centered =
      load_object(cfg.rolling_object, grid, cfg.rolling_object_scale);
  MotionModel motion{translate_bilinear(centered, -cfg.velocity_x * t_mid,
                                        -cfg.velocity_y * t_mid),
                     cfg.velocity_x, cfg.velocity_y};

  const std::string label = object_label(cfg.rolling_object);
  const ForwardModel model = make_forward_model(
      load_psf(cfg),
      make_sampling_mask(grid, cfg.rate, derive_seed(cfg.seed, label, cfg.rate, "mask")),
      grid);
  NoiseSpec noise;
  if (cfg.noise_sigma > 0.0) {
    noise.kind = NoiseSpec::Kind::gaussian;
    noise.sigma = cfg.noise_sigma;
    noise.seed = derive_seed(cfg.seed, label, cfg.rate, "noise");
  }
  out.measurement = simulate_rolling_shutter(motion, model, tl, noise);
  write_raster(out.measurement, (dir / "rolling_measurement.decr").string());
  write_pgm(out.measurement, (dir / "rolling_measurement.pgm").string());

  const auto [cx0, cy0] = [&] {
    double w = 0.0, x = 0.0, y = 0.0;
    for (std::size_t r = 0; r < grid.rows; ++r) {
      for (std::size_t c = 0; c < grid.cols; ++c) {
        w += motion.base_object(r, c);
        x += motion.base_object(r, c) * static_cast<double>(c);
        y += motion.base_object(r, c) * static_cast<double>(r);
      }
    }
    return std::pair{x / w, y / w};
  }();

  out.frames.resize(tl.n_frames);
  std::vector<std::string> errors(tl.n_frames);
  parallel_for(tl.n_frames, cfg.threads, [&](std::size_t k) {
    try {
      RollingFrame& f = out.frames[k];
      f.time = tl.frame_time(k);
      f.true_x = cx0 + cfg.velocity_x * f.time;
      f.true_y = cy0 + cfg.velocity_y * f.time;
      const ForwardModel band{model.psf, band_mask(model.mask, tl, k), grid};
      const SolveResult s = reconstruct_edges(out.measurement, band, cfg.kernel,
                                              cfg.inverse_spec(), cfg.solve_config(true));
      f.edge = crop_center(s.estimate, grid.rows, grid.cols);
      std::tie(f.centroid_x, f.centroid_y) = edge_centroid(f.edge);
    } catch (const Error& e) {
      errors[k] = e.what();
    }
  });
  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (!errors[k].empty()) throw Error("band " + std::to_string(k) + ": " + errors[k]);
  }

  std::ostringstream csv;
  csv << "frame,time_ms,true_x,true_y,centroid_x,centroid_y\n";
  for (std::size_t k = 0; k < out.frames.size(); ++k) {
    const RollingFrame& f = out.frames[k];
    char tag[16];
    std::snprintf(tag, sizeof tag, "frame_%02zu", k);
    write_raster(f.edge, (dir / (std::string(tag) + ".decr")).string());
    write_pgm(f.edge, (dir / (std::string(tag) + ".pgm")).string());
    csv << k << ',' << format_real(f.time) << ',' << format_real(f.true_x) << ','
        << format_real(f.true_y) << ',' << format_real(f.centroid_x) << ','
        << format_real(f.centroid_y) << '\n';
  }
  out.trajectory = dir / "trajectory.csv";
  write_text(out.trajectory, csv.str());
  write_metadata(dir / "rolling.meta", cfg,
                 {{"band_height", std::to_string(tl.band_height())},
                  {"line_time_ms", format_real(tl.line_time)}});
  return out;
}

} // namespace diffecam
