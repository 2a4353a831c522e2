#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "image.hpp"

namespace diffecam {

// Procedural binary test objects. Geometry is defined in a unit box
// (u = horizontal, v = vertical, both in [0, 1], v grows downwards), scaled
// into a centered square of side scale * min(rows, cols) and rasterized by
// pixel-center sampling.

namespace shapes {

struct Point {
  double u, v;
};

struct Rect {
  double u0, v0, u1, v1;
  bool contains(Point p) const { return p.u >= u0 && p.u <= u1 && p.v >= v0 && p.v <= v1; }
};

struct Polygon {
  std::vector<Point> vertices;
  bool contains(Point p) const {
    bool inside = false;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point a = vertices[i];
      const Point b = vertices[j];
      if ((a.v > p.v) != (b.v > p.v) &&
          p.u < (b.u - a.u) * (p.v - a.v) / (b.v - a.v) + a.u) {
        inside = !inside;
      }
    }
    return inside;
  }
};

struct Disk {
  Point c;
  double r;
  bool contains(Point p) const {
    return (p.u - c.u) * (p.u - c.u) + (p.v - c.v) * (p.v - c.v) <= r * r;
  }
};

/// Annular sector above the center line (v <= center.v).
struct UpperArc {
  Point c;
  double r_in, r_out;
  bool contains(Point p) const {
    const double d2 = (p.u - c.u) * (p.u - c.u) + (p.v - c.v) * (p.v - c.v);
    return p.v <= c.v && d2 >= r_in * r_in && d2 <= r_out * r_out;
  }
};

template <typename F>
Image2D rasterize(std::size_t rows, std::size_t cols, double scale, F&& inside) {
  if (!(scale > 0.0 && scale <= 1.0)) throw ConfigError("object scale must lie in (0, 1]");
  Image2D out(rows, cols, 0.0);
  const double side = scale * static_cast<double>(std::min(rows, cols));
  const double r0 = 0.5 * (static_cast<double>(rows) - side);
  const double c0 = 0.5 * (static_cast<double>(cols) - side);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const Point p{(static_cast<double>(c) + 0.5 - c0) / side,
                    (static_cast<double>(r) + 0.5 - r0) / side};
      if (p.u < 0 || p.u > 1 || p.v < 0 || p.v > 1) continue;
      if (inside(p)) out(r, c) = 1.0;
    }
  }
  return out;
}

inline Image2D letter_t(std::size_t rows, std::size_t cols, double scale) {
  const Rect bar{0.1, 0.1, 0.9, 0.3};
  const Rect stem{0.38, 0.3, 0.62, 0.9};
  return rasterize(rows, cols, scale,
                   [&](Point p) { return bar.contains(p) || stem.contains(p); });
}

inline Image2D three_stripes(std::size_t rows, std::size_t cols, double scale) {
  const std::array<Rect, 3> bars{Rect{0.1, 0.1, 0.26, 0.9}, Rect{0.42, 0.1, 0.58, 0.9},
                                 Rect{0.74, 0.1, 0.9, 0.9}};
  return rasterize(rows, cols, scale, [&](Point p) {
    for (const auto& b : bars)
      if (b.contains(p)) return true;
    return false;
  });
}

inline Image2D up_arrow(std::size_t rows, std::size_t cols, double scale) {
  const Polygon head{{{0.5, 0.08}, {0.88, 0.48}, {0.12, 0.48}}};
  const Rect stem{0.38, 0.48, 0.62, 0.92};
  return rasterize(rows, cols, scale,
                   [&](Point p) { return head.contains(p) || stem.contains(p); });
}

inline Image2D u_turn_arrow(std::size_t rows, std::size_t cols, double scale) {
  const Rect left{0.12, 0.4, 0.3, 0.92};
  const UpperArc arc{{0.42, 0.4}, 0.12, 0.30};
  const Rect right{0.54, 0.4, 0.72, 0.6};
  const Polygon head{{{0.42, 0.6}, {0.84, 0.6}, {0.63, 0.9}}};
  return rasterize(rows, cols, scale, [&](Point p) {
    return left.contains(p) || arc.contains(p) || right.contains(p) || head.contains(p);
  });
}

inline Image2D car(std::size_t rows, std::size_t cols, double scale) {
  const Rect body{0.06, 0.42, 0.94, 0.7};
  const Polygon cabin{{{0.24, 0.42}, {0.36, 0.2}, {0.66, 0.2}, {0.78, 0.42}}};
  const Disk front{{0.27, 0.74}, 0.12};
  const Disk rear{{0.73, 0.74}, 0.12};
  return rasterize(rows, cols, scale, [&](Point p) {
    return body.contains(p) || cabin.contains(p) || front.contains(p) || rear.contains(p);
  });
}

} // namespace shapes

inline const std::vector<std::string>& builtin_object_names() {
  static const std::vector<std::string> names{"letter_T", "three_stripes", "up_arrow",
                                              "u_turn_arrow", "car"};
  return names;
}

inline bool is_builtin_object(std::string_view name) {
  for (const auto& n : builtin_object_names())
    if (n == name) return true;
  return false;
}

/// Rasterize a named built-in object on a rows x cols grid.
inline Image2D make_builtin_object(std::string_view name, std::size_t rows, std::size_t cols,
                                   double scale = 0.75) {
  if (name == "letter_T") return shapes::letter_t(rows, cols, scale);
  if (name == "three_stripes") return shapes::three_stripes(rows, cols, scale);
  if (name == "up_arrow") return shapes::up_arrow(rows, cols, scale);
  if (name == "u_turn_arrow") return shapes::u_turn_arrow(rows, cols, scale);
  if (name == "car") return shapes::car(rows, cols, scale);
  throw ConfigError("unknown built-in object '" + std::string(name) + "'");
}

} // namespace diffecam
