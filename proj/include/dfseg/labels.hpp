#pragma once

// YOLO-style segmentation labels: one line per object,
//   class x1 y1 x2 y2 ... xn yn
// with coordinates normalized to [0, 1]. Polygons are rasterized with the
// even-odd rule sampled at pixel centers; centers lying exactly on the
// polygon boundary (edges or vertices) count as inside.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dfseg/box.hpp"
#include "dfseg/error.hpp"
#include "dfseg/mask.hpp"
#include "dfseg/target.hpp"

namespace dfseg {

struct Point {
  double x = 0.0, y = 0.0;
};

namespace detail {

// x where edge (a, b) crosses the horizontal line at py. Only called for
// edges with exactly one endpoint strictly above py.
inline double crossing_x(const Point& a, const Point& b, double py) {
  return (b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x;
}

inline bool straddles(const Point& a, const Point& b, double py) {
  return (a.y > py) != (b.y > py);
}

}  // namespace detail

// Polygon in pixel units -> height x width mask.
inline BinaryMask rasterize_polygon(const std::vector<Point>& poly, std::size_t height,
                                    std::size_t width) {
  BinaryMask mask(height, width);
  const std::size_t n = poly.size();
  if (n < 3) return mask;
  std::vector<double> xs;
  for (std::size_t y = 0; y < height; ++y) {
    const double py = static_cast<double>(y) + 0.5;
    xs.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      if (detail::straddles(poly[i], poly[j], py)) xs.push_back(detail::crossing_x(poly[i], poly[j], py));
    }
    std::sort(xs.begin(), xs.end());
    // Parity fill: a center is inside when an odd number of crossings lie
    // strictly to its right.
    std::size_t right_of = 0;  // crossings <= px
    for (std::size_t x = 0; x < width; ++x) {
      const double px = static_cast<double>(x) + 0.5;
      while (right_of < xs.size() && xs[right_of] <= px) ++right_of;
      const bool on_crossing = right_of > 0 && xs[right_of - 1] == px;
      if (((xs.size() - right_of) & 1U) || on_crossing) mask.at(y, x) = 1;
    }
    // Horizontal edges lying on this row and vertices sitting on centers.
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point& a = poly[i];
      const Point& b = poly[j];
      if (a.y != py || b.y != py) continue;
      const double lo = std::min(a.x, b.x), hi = std::max(a.x, b.x);
      for (std::size_t x = 0; x < width; ++x) {
        const double px = static_cast<double>(x) + 0.5;
        if (px >= lo && px <= hi) mask.at(y, x) = 1;
      }
    }
    for (const Point& v : poly) {
      if (v.y != py) continue;
      const double fx = v.x - 0.5;
      if (fx >= 0.0 && fx < static_cast<double>(width) && std::floor(fx) == fx) {
        mask.at(y, static_cast<std::size_t>(fx)) = 1;
      }
    }
  }
  return mask;
}

// Parses one label file. Missing files are treated as images without
// objects; an empty file yields no targets.
inline std::vector<InstanceTarget> load_yolo_seg_labels(const std::filesystem::path& path,
                                                        std::size_t image_w, std::size_t image_h,
                                                        std::size_t class_count) {
  std::vector<InstanceTarget> out;
  if (!std::filesystem::exists(path)) return out;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    long long cls = 0;
    if (!(ss >> cls)) fail("expected a class index");
    if (cls < 0 || static_cast<std::size_t>(cls) >= class_count) {
      fail("class index " + std::to_string(cls) + " outside [0, " + std::to_string(class_count) + ")");
    }
    std::vector<double> coords;
    std::string tok;
    while (ss >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        fail("bad coordinate '" + tok + "'");
      }
      if (used != tok.size() || !std::isfinite(v)) fail("bad coordinate '" + tok + "'");
      coords.push_back(std::clamp(v, 0.0, 1.0));
    }
    if (coords.size() < 6 || coords.size() % 2 != 0) {
      fail("polygon needs an even number (>= 6) of coordinates, got " + std::to_string(coords.size()));
    }
    std::vector<Point> poly;
    CornerBox tight{1.0, 1.0, 0.0, 0.0};
    for (std::size_t i = 0; i < coords.size(); i += 2) {
      const double nx = coords[i], ny = coords[i + 1];
      poly.push_back({nx * static_cast<double>(image_w), ny * static_cast<double>(image_h)});
      tight = {std::min(tight.x0, nx), std::min(tight.y0, ny), std::max(tight.x1, nx),
               std::max(tight.y1, ny)};
    }
    InstanceTarget t;
    t.class_id = static_cast<int>(cls);
    t.box = to_center_size(tight);
    t.mask = rasterize_polygon(poly, image_h, image_w);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace dfseg
