#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dfseg/error.hpp"
#include "dfseg/tensor.hpp"

namespace dfseg {

// Binary H x W mask, row-major, one byte per pixel (0 or 1).
struct BinaryMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;

  BinaryMask() = default;
  BinaryMask(std::size_t h, std::size_t w, std::uint8_t fill = 0)
      : height(h), width(w), pixels(h * w, fill) {}

  bool empty() const { return pixels.empty(); }
  std::size_t size() const { return pixels.size(); }
  std::uint8_t& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
  std::uint8_t at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto p : pixels) n += p;
    return n;
  }

  Tensor to_tensor() const {
    Tensor t({height, width});
    for (std::size_t i = 0; i < pixels.size(); ++i) t[i] = pixels[i];
    return t;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

// |a & b| / |a | b|; two empty masks give 0.
inline double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (a.height != b.height || a.width != b.width) {
    throw ShapeError("mask_iou: " + std::to_string(a.height) + "x" + std::to_string(a.width) +
                     " vs " + std::to_string(b.height) + "x" + std::to_string(b.width));
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    inter += a.pixels[i] & b.pixels[i];
    uni += a.pixels[i] | b.pixels[i];
  }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

}  // namespace dfseg
