#pragma once

#include <vector>

#include "dfseg/box.hpp"
#include "dfseg/mask.hpp"
#include "dfseg/tensor.hpp"

namespace dfseg {

// One ground-truth object.
struct InstanceTarget {
  int class_id = 0;
  Box box;             // normalized cx, cy, w, h
  BinaryMask mask;     // image resolution
  Tensor soft_mask;    // mask-head resolution, values in [0, 1]; empty until attached
};

// Bilinear resize of binary masks to the mask-head grid. The results are
// soft targets and are not re-binarized.
inline std::vector<Tensor> resize_targets(const std::vector<BinaryMask>& masks, std::size_t out_h,
                                          std::size_t out_w) {
  std::vector<Tensor> out;
  out.reserve(masks.size());
  for (const auto& m : masks) out.push_back(bilinear_resize(m.to_tensor(), out_h, out_w));
  return out;
}

inline void attach_soft_masks(std::vector<InstanceTarget>& targets, std::size_t out_h,
                              std::size_t out_w) {
  for (auto& t : targets) t.soft_mask = bilinear_resize(t.mask.to_tensor(), out_h, out_w);
}

}  // namespace dfseg
