#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "diffuser_sim.hpp"
#include "edge_model.hpp"
#include "metrics.hpp"
#include "random.hpp"
#include "rolling_shutter.hpp"
#include "shapes.hpp"
#include "solver.hpp"

namespace diffecam {

namespace detail {

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline std::string canonical_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

inline double parse_double(const std::string& key, const std::string& v) {
  // strtod honours the C locale only, which is what we want for config files
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d)) {
    throw ConfigError("key '" + key + "': expected a real number, got '" + v + "'");
  }
  return d;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string format_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_real(xs[i]);
  }
  return out;
}

inline std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += xs[i];
  }
  return out;
}

} // namespace detail

/// Everything a CLI run needs. Each field is reachable through a config key
/// (see keys()) and the matching --flag.
struct RunConfig {
  // grid
  std::size_t rows = 128;
  std::size_t cols = 128;
  std::size_t pad_rows = 0; ///< 0: twice rows
  std::size_t pad_cols = 0; ///< 0: twice cols

  std::uint64_t seed = 1;

  // psf
  std::string psf_file;
  double psf_grain_sigma = 1.0;
  double psf_density = 0.1;

  // object
  std::string object = "letter_T"; ///< built-in name or raster/PGM path
  double object_scale = 0.75;
  std::vector<std::string> objects{"letter_T", "three_stripes", "up_arrow", "u_turn_arrow"};

  // sampling
  double rate = 1.0;
  std::vector<double> rates{0.2, 0.3, 0.5, 0.7, 0.9};
  double noise_sigma = 0.0;

  // inputs for edge/baseline when not simulating in-process
  std::string measurement_file;
  std::string mask_file;

  // solver
  std::optional<double> tau;
  std::size_t max_iters = 200;
  double rel_tol = 1e-4;
  double twist_alpha = 1.9;
  std::optional<double> twist_beta;
  std::size_t tv_inner_iters = 10;
  bool object_nonneg = true;
  bool edge_nonneg = false;
  Regularizer edge_regularizer = Regularizer::tv;

  // edge model
  double epsilon = 1e-3;
  EdgeKernel kernel = edge_kernel_default();

  // rolling shutter
  std::size_t frames = 8;
  std::optional<double> line_time; ///< unset: 8.5 ms frame spacing
  double exposure_time = 4.0;
  double velocity_x = 0.25; ///< columns per ms
  double velocity_y = 0.0;
  std::string rolling_object = "car";
  double rolling_object_scale = 0.5;

  std::string out_dir = "out";
  std::size_t threads = 0; ///< 0: hardware concurrency

  struct Key {
    const char* name;
    const char* help;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
  };

  static const std::vector<Key>& keys();

  void set(const std::string& raw_key, const std::string& value) {
    const std::string key = detail::canonical_key(detail::trim(raw_key));
    for (const auto& k : keys()) {
      if (key == k.name) {
        k.set(*this, detail::trim(value));
        return;
      }
    }
    throw ConfigError("unknown config key '" + raw_key + "'");
  }

  /// Canonical (key, value) listing in key-table order.
  std::vector<std::pair<std::string, std::string>> entries() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : keys()) out.emplace_back(k.name, k.get(*this));
    return out;
  }

  std::string digest() const {
    std::uint64_t h = fnv1a("");
    for (const auto& [k, v] : entries()) {
      if (k == "out_dir" || k == "threads") continue;
      h = fnv1a(k + "=" + v + "\n", h);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  GridSpec grid() const {
    GridSpec g{rows, cols, pad_rows ? pad_rows : 2 * rows, pad_cols ? pad_cols : 2 * cols};
    g.validate();
    return g;
  }

  PsfParams psf_params() const {
    return PsfParams{seed, psf_grain_sigma, psf_density, grid()};
  }

  SolveConfig solve_config(bool edge_path) const {
    SolveConfig c;
    c.tau = tau;
    c.max_iters = max_iters;
    c.rel_tol = rel_tol;
    c.twist_alpha = twist_alpha;
    c.twist_beta = twist_beta;
    c.tv_inner_iters = tv_inner_iters;
    c.nonneg = edge_path ? edge_nonneg : object_nonneg;
    c.regularizer = edge_path ? edge_regularizer : Regularizer::tv;
    c.validate();
    return c;
  }

  InverseSpec inverse_spec() const {
    InverseSpec s{epsilon};
    s.validate();
    return s;
  }

  ShutterTimeline timeline() const {
    ShutterTimeline t;
    t.n_rows = grid().pad_rows;
    t.n_frames = frames;
    t.exposure_time = exposure_time;
    if (frames == 0 || frames > t.n_rows) {
      throw ConfigError("frames must lie in [1, " + std::to_string(t.n_rows) + "]");
    }
    t.line_time = line_time ? *line_time : 8.5 / static_cast<double>(t.n_rows / frames);
    t.validate();
    return t;
  }

  void validate() const {
    grid();
    psf_params().validate();
    solve_config(true);
    solve_config(false);
    inverse_spec();
    timeline();
    for (double r : rates) {
      if (!(r > 0.0 && r <= 1.0)) throw ConfigError("rates must lie in (0, 1]");
    }
    if (!(rate > 0.0 && rate <= 1.0)) throw ConfigError("rate must lie in (0, 1]");
    if (!(noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be nonnegative");
    if (objects.empty()) throw ConfigError("objects list is empty");
    if (rates.empty()) throw ConfigError("rates list is empty");
    for (const auto& o : objects) check_object_source(o);
    check_object_source(object);
    for (const auto* f : {&psf_file, &measurement_file, &mask_file}) {
      if (!f->empty() && !std::ifstream(*f)) throw ConfigError("file '" + *f + "' not found");
    }
  }

  static void check_object_source(const std::string& name) {
    if (is_builtin_object(name)) return;
    if (!std::ifstream(name)) {
      throw ConfigError("object '" + name + "' is neither a built-in shape nor a readable file");
    }
  }
};

inline const std::vector<RunConfig::Key>& RunConfig::keys() {
  using C = RunConfig;
  using namespace detail;
  auto size_key = [](const char* name, const char* help, std::size_t C::*field) {
    return Key{name, help,
               [=](C& c, const std::string& v) { c.*field = parse_uint(name, v); },
               [=](const C& c) { return std::to_string(c.*field); }};
  };
  auto real_key = [](const char* name, const char* help, double C::*field) {
    return Key{name, help,
               [=](C& c, const std::string& v) { c.*field = parse_double(name, v); },
               [=](const C& c) { return format_real(c.*field); }};
  };
  auto auto_real_key = [](const char* name, const char* help, std::optional<double> C::*field) {
    return Key{name, help,
               [=](C& c, const std::string& v) {
                 if (v == "auto") c.*field = std::nullopt;
                 else c.*field = parse_double(name, v);
               },
               [=](const C& c) {
                 return (c.*field) ? format_real(*(c.*field)) : std::string("auto");
               }};
  };
  auto text_key = [](const char* name, const char* help, std::string C::*field) {
    return Key{name, help, [=](C& c, const std::string& v) { c.*field = v; },
               [=](const C& c) { return c.*field; }};
  };
  auto bool_key = [](const char* name, const char* help, bool C::*field) {
    return Key{name, help, [=](C& c, const std::string& v) { c.*field = parse_bool(name, v); },
               [=](const C& c) { return std::string(c.*field ? "true" : "false"); }};
  };

  static const std::vector<Key> table{
      size_key("rows", "working grid rows", &C::rows),
      size_key("cols", "working grid columns", &C::cols),
      size_key("pad_rows", "padded grid rows (0: 2 x rows)", &C::pad_rows),
      size_key("pad_cols", "padded grid columns (0: 2 x cols)", &C::pad_cols),
      Key{"seed", "global seed",
          [](C& c, const std::string& v) { c.seed = parse_uint("seed", v); },
          [](const C& c) { return std::to_string(c.seed); }},
      text_key("psf_file", "import PSF from a DECR or PGM file instead of synthesizing",
               &C::psf_file),
      real_key("psf_grain_sigma", "speckle grain size in pixels", &C::psf_grain_sigma),
      real_key("psf_density", "fraction of speckle pixels kept", &C::psf_density),
      text_key("object", "built-in object name or raster path", &C::object),
      real_key("object_scale", "object size as a fraction of the grid", &C::object_scale),
      Key{"objects", "comma-separated objects for sweeps",
          [](C& c, const std::string& v) { c.objects = split_list(v); },
          [](const C& c) { return join(c.objects); }},
      real_key("rate", "sampling rate in (0, 1]", &C::rate),
      Key{"rates", "comma-separated sampling rates for sweeps",
          [](C& c, const std::string& v) {
            c.rates.clear();
            for (const auto& s : split_list(v)) c.rates.push_back(parse_double("rates", s));
          },
          [](const C& c) { return format_list(c.rates); }},
      real_key("noise_sigma", "additive Gaussian noise std (0: off)", &C::noise_sigma),
      text_key("measurement", "measurement raster for edge/baseline", &C::measurement_file),
      text_key("mask", "sampling mask raster for edge/baseline", &C::mask_file),
      auto_real_key("tau", "regularization weight (auto: 0.01 max|A^T y|)", &C::tau),
      size_key("max_iters", "solver iteration cap", &C::max_iters),
      real_key("rel_tol", "relative objective-change stopping threshold", &C::rel_tol),
      real_key("twist_alpha", "two-step coefficient alpha", &C::twist_alpha),
      auto_real_key("twist_beta", "two-step coefficient beta (auto: from alpha)",
                    &C::twist_beta),
      size_key("tv_inner_iters", "inner iterations of the TV prox", &C::tv_inner_iters),
      bool_key("object_nonneg", "nonnegativity for object reconstruction", &C::object_nonneg),
      bool_key("edge_nonneg", "nonnegativity for direct edge reconstruction", &C::edge_nonneg),
      Key{"edge_regularizer", "penalty for direct edge reconstruction: tv or l1",
          [](C& c, const std::string& v) {
            if (v == "tv") c.edge_regularizer = Regularizer::tv;
            else if (v == "l1") c.edge_regularizer = Regularizer::l1;
            else throw ConfigError("edge_regularizer must be tv or l1, got '" + v + "'");
          },
          [](const C& c) {
            return std::string(c.edge_regularizer == Regularizer::tv ? "tv" : "l1");
          }},
      real_key("epsilon", "relative Tikhonov constant of the edge-operator inverse",
               &C::epsilon),
      Key{"kernel", "edge stencil: nine reals, row-major",
          [](C& c, const std::string& v) { c.kernel = EdgeKernel::parse(v); },
          [](const C& c) { return c.kernel.to_string(); }},
      size_key("frames", "rolling-shutter frame count", &C::frames),
      auto_real_key("line_time", "ms between row starts (auto: 8.5 ms frame spacing)",
                    &C::line_time),
      real_key("exposure_time", "row exposure in ms", &C::exposure_time),
      real_key("velocity_x", "object velocity in columns per ms", &C::velocity_x),
      real_key("velocity_y", "object velocity in rows per ms", &C::velocity_y),
      text_key("rolling_object", "moving object for rolling runs", &C::rolling_object),
      real_key("rolling_object_scale", "moving object size as a fraction of the grid",
               &C::rolling_object_scale),
      text_key("out_dir", "output directory", &C::out_dir),
      size_key("threads", "worker threads for sweeps (0: all cores)", &C::threads),
  };
  return table;
}

/// Apply "key = value" lines; '#' starts a comment.
inline void apply_config_text(RunConfig& cfg, const std::string& text,
                              const std::string& origin = "config") {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      cfg.set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(cfg, buf.str(), path);
}

} // namespace diffecam
