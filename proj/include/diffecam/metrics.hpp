#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "edge_model.hpp"
#include "image.hpp"

namespace diffecam {

/// Min-max rescale to [0, 255], rounded half away from zero. A constant input
/// maps to all zeros.
inline Image2D quantize_8bit(const Image2D& x) {
  const double lo = min_value(x);
  const double hi = max_value(x);
  Image2D out(x.rows(), x.cols(), 0.0);
  if (!(hi > lo)) return out;
  const double scale = 255.0 / (hi - lo);
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::clamp(std::round((x[i] - lo) * scale), 0.0, 255.0);
  }
  return out;
}

inline double mse(const Image2D& i, const Image2D& k) {
  require_same_shape(i, k, "mse");
  double s = 0.0;
  for (std::size_t n = 0; n < i.size(); ++n) {
    const double d = i[n] - k[n];
    s += d * d;
  }
  return s / static_cast<double>(i.size());
}

/// 10 log10(255^2 / MSE) in dB; +infinity when the images agree exactly.
inline double psnr(const Image2D& i, const Image2D& k) {
  const double e = mse(i, k);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / e);
}

/// Shannon entropy in bits of the pixel histogram of quantize_8bit(x).
inline double information_entropy(const Image2D& x, std::size_t bins = 256) {
  if (bins == 0) throw ConfigError("entropy needs at least one bin");
  const Image2D q = quantize_8bit(x);
  std::vector<std::size_t> hist(bins, 0);
  for (double v : q) {
    auto b = static_cast<std::size_t>(v * static_cast<double>(bins) / 256.0);
    ++hist[std::min(b, bins - 1)];
  }
  const double n = static_cast<double>(q.size());
  double h = 0.0;
  for (std::size_t c : hist) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

/// Scoring reference K: the edge operator applied to the ground-truth object,
/// quantized to 8 bits.
inline Image2D reference_edge(const Image2D& ground_truth, const EdgeKernel& k) {
  return quantize_8bit(apply_edge_operator(ground_truth, k));
}

enum class Method { diffuser_ecam, post_processing };

inline const char* method_name(Method m) {
  return m == Method::diffuser_ecam ? "diffuser_ecam" : "post_processing";
}

struct MetricsRecord {
  std::string object_id;
  Method method = Method::diffuser_ecam;
  double sampling_rate = 1.0;
  double psnr_db = 0.0;
  double ie_bits = 0.0;
  double mse = 0.0;
};

/// Shortest-exact decimal rendering, stable across runs and platforms.
inline std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct MetricsReport {
  std::vector<MetricsRecord> records;
  std::vector<std::pair<std::string, std::string>> metadata;

  static constexpr const char* csv_header = "object_id,method,sampling_rate,psnr_db,ie_bits,mse";

  void write_csv(std::ostream& out) const {
    out << csv_header << '\n';
    for (const auto& r : records) write_row(out, r);
  }

  static void write_row(std::ostream& out, const MetricsRecord& r) {
    out << r.object_id << ',' << method_name(r.method) << ',' << format_real(r.sampling_rate)
        << ',' << format_real(r.psnr_db) << ',' << format_real(r.ie_bits) << ','
        << format_real(r.mse) << '\n';
  }

  void write_metadata(std::ostream& out) const {
    for (const auto& [k, v] : metadata) out << k << " = " << v << '\n';
  }
};

} // namespace diffecam
