#pragma once

#include <algorithm>
#include <cmath>

namespace dfseg {

// Center-size box, normalized to [0, 1] image coordinates.
struct Box {
  double cx = 0.0, cy = 0.0, w = 0.0, h = 0.0;
  friend bool operator==(const Box&, const Box&) = default;
};

// Corner box (x0, y0) - (x1, y1); units depend on context.
struct CornerBox {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  double width() const { return std::max(0.0, x1 - x0); }
  double height() const { return std::max(0.0, y1 - y0); }
  double area() const { return width() * height(); }
  friend bool operator==(const CornerBox&, const CornerBox&) = default;
};

inline CornerBox to_corners(const Box& b) {
  return {b.cx - b.w / 2, b.cy - b.h / 2, b.cx + b.w / 2, b.cy + b.h / 2};
}

inline Box to_center_size(const CornerBox& b) {
  return {(b.x0 + b.x1) / 2, (b.y0 + b.y1) / 2, b.x1 - b.x0, b.y1 - b.y0};
}

inline double intersection_area(const CornerBox& a, const CornerBox& b) {
  const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

// IoU in [0, 1]; two empty boxes give 0.
inline double box_iou(const CornerBox& a, const CornerBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

// Generalized IoU in (-1, 1]: IoU - (hull - union) / hull.
inline double generalized_iou(const CornerBox& a, const CornerBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double iou = uni > 0.0 ? inter / uni : 0.0;
  const CornerBox hull{std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1),
                       std::max(a.y1, b.y1)};
  const double hull_area = hull.area();
  if (hull_area <= 0.0) return iou;
  return iou - (hull_area - uni) / hull_area;
}

}  // namespace dfseg
