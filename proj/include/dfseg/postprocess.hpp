#pragma once

// Raw model outputs -> final instances: confidence filter, box scaling,
// mask upsampling, binarization and box cleanup.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "dfseg/box.hpp"
#include "dfseg/error.hpp"
#include "dfseg/mask.hpp"
#include "dfseg/tensor.hpp"

namespace dfseg {

struct ImageSize {
  std::size_t height = 0;
  std::size_t width = 0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

struct RawDetections {
  std::vector<double> scores;     // per-query max class probability
  std::vector<int> class_ids;
  std::vector<Box> boxes;         // normalized, model input scale
  Tensor mask_logits;             // Q x h x w (empty when Q == 0)

  std::size_t size() const { return scores.size(); }

  void validate() const {
    const std::size_t q = scores.size();
    if (class_ids.size() != q || boxes.size() != q ||
        (q > 0 && (mask_logits.rank() != 3 || mask_logits.dim(0) != q))) {
      throw ShapeError("raw detections disagree on query count");
    }
    for (double s : scores) {
      if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("scores must lie in [0, 1]");
    }
  }
};

struct Instance {
  int class_id = 0;
  double score = 0.0;
  CornerBox box_px;  // original-image pixels
  BinaryMask mask;   // original resolution
};

struct PostprocessConfig {
  double conf_threshold = 0.5;
  double mask_threshold = 0.5;
  ImageSize input_size{640, 640};
  ImageSize original_size{640, 640};
};

// Keeps queries with score >= threshold, preserving order.
inline RawDetections filter_confidence(const RawDetections& raw, double threshold) {
  raw.validate();
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw.scores[i] >= threshold) keep.push_back(i);
  }
  RawDetections out;
  if (keep.empty()) return out;
  const std::size_t h = raw.mask_logits.dim(1), w = raw.mask_logits.dim(2);
  out.mask_logits = Tensor({keep.size(), h, w});
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.scores.push_back(raw.scores[keep[k]]);
    out.class_ids.push_back(raw.class_ids[keep[k]]);
    out.boxes.push_back(raw.boxes[keep[k]]);
    out.mask_logits.set_slice(k, raw.mask_logits.slice(keep[k]));
  }
  return out;
}

// Sigmoid first, then bilinear resize of the probabilities.
inline Tensor upscale_mask(const Tensor& logits, ImageSize original) {
  detail::require_rank(logits, 2, "upscale_mask logits");
  return bilinear_resize(sigmoid(logits), original.height, original.width);
}

inline BinaryMask binarize(const Tensor& probs, double threshold) {
  detail::require_rank(probs, 2, "binarize input");
  BinaryMask m(probs.dim(0), probs.dim(1));
  for (std::size_t i = 0; i < probs.size(); ++i) m.pixels[i] = probs[i] >= threshold ? 1 : 0;
  return m;
}

namespace detail {

// Pixel (y, x) is inside when its center lies in [x0, x1) x [y0, y1).
inline bool center_inside(const CornerBox& b, std::size_t y, std::size_t x) {
  const double cx = static_cast<double>(x) + 0.5, cy = static_cast<double>(y) + 0.5;
  return cx >= b.x0 && cx < b.x1 && cy >= b.y0 && cy < b.y1;
}

}  // namespace detail

inline BinaryMask crop_to_box(BinaryMask mask, const CornerBox& box) {
  for (std::size_t y = 0; y < mask.height; ++y) {
    for (std::size_t x = 0; x < mask.width; ++x) {
      if (!detail::center_inside(box, y, x)) mask.at(y, x) = 0;
    }
  }
  return mask;
}

inline Tensor crop_to_box(Tensor probs, const CornerBox& box) {
  detail::require_rank(probs, 2, "crop_to_box input");
  for (std::size_t y = 0; y < probs.dim(0); ++y) {
    for (std::size_t x = 0; x < probs.dim(1); ++x) {
      if (!detail::center_inside(box, y, x)) probs(y, x) = 0.0;
    }
  }
  return probs;
}

// Normalized cxcywh -> clamped corner boxes in original-image pixels. The
// model input is a plain (non-letterboxed) resize of the original, so
// normalized coordinates map directly.
inline std::vector<CornerBox> scale_boxes(const std::vector<Box>& boxes, ImageSize /*input*/,
                                          ImageSize original) {
  const double w0 = static_cast<double>(original.width);
  const double h0 = static_cast<double>(original.height);
  std::vector<CornerBox> out;
  out.reserve(boxes.size());
  for (const Box& b : boxes) {
    const CornerBox c = to_corners(b);
    out.push_back({std::clamp(c.x0 * w0, 0.0, w0), std::clamp(c.y0 * h0, 0.0, h0),
                   std::clamp(c.x1 * w0, 0.0, w0), std::clamp(c.y1 * h0, 0.0, h0)});
  }
  return out;
}

// filter -> scale boxes -> upscale masks -> binarize -> crop; instances are
// returned by descending score (stable for equal scores).
inline std::vector<Instance> postprocess(const RawDetections& raw, const PostprocessConfig& cfg) {
  const RawDetections kept = filter_confidence(raw, cfg.conf_threshold);
  const auto boxes = scale_boxes(kept.boxes, cfg.input_size, cfg.original_size);
  std::vector<Instance> out;
  out.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    Instance inst;
    inst.class_id = kept.class_ids[i];
    inst.score = kept.scores[i];
    inst.box_px = boxes[i];
    const Tensor probs = upscale_mask(kept.mask_logits.slice(i), cfg.original_size);
    inst.mask = crop_to_box(binarize(probs, cfg.mask_threshold), inst.box_px);
    out.push_back(std::move(inst));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Instance& a, const Instance& b) { return a.score > b.score; });
  return out;
}

}  // namespace dfseg
