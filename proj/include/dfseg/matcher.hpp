#pragma once

// Bipartite matching between queries and ground truth. The cost adds mask
// terms (dice and sigmoid focal) evaluated over the full mask-head map,
// unlike the ROI-cropped training losses.

#include <cmath>
#include <cstddef>
#include <vector>

#include "dfseg/box.hpp"
#include "dfseg/error.hpp"
#include "dfseg/hungarian.hpp"
#include "dfseg/losses.hpp"
#include "dfseg/target.hpp"
#include "dfseg/tensor.hpp"

namespace dfseg {

// One query's output: sigmoid class probabilities, box, mask logits.
struct Prediction {
  std::vector<double> class_probs;
  Box box;
  Tensor mask_logits;  // h x w
};

struct CostWeights {
  double w_class = 2.0;
  double w_l1 = 5.0;
  double w_giou = 2.0;
  double w_dice = 1.0;
  double w_focal_mask = 1.0;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
  double dice_eps = 1.0;
};

// Focal-style classification cost at the target's class probability.
inline double class_cost(double p, double alpha = 0.25, double gamma = 2.0) {
  constexpr double kLogEps = 1e-8;
  const double pos = alpha * std::pow(1.0 - p, gamma) * -std::log(p + kLogEps);
  const double neg = (1.0 - alpha) * std::pow(p, gamma) * -std::log(1.0 - p + kLogEps);
  return pos - neg;
}

namespace detail {

inline double dice_cost_from_probs(const Tensor& probs, const Tensor& target, double eps) {
  double pt = 0.0, ps = 0.0, ts = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    pt += probs[i] * target[i];
    ps += probs[i];
    ts += target[i];
  }
  return 1.0 - (2.0 * pt + eps) / (ps + ts + eps);
}

}  // namespace detail

// 1 - dice between sigmoid(logits) and the soft target over the whole map.
inline double dice_cost(const Tensor& logits, const Tensor& target, double eps = 1.0) {
  return detail::dice_cost_from_probs(sigmoid(logits), target, eps);
}

// Sigmoid focal loss averaged over every mask pixel.
inline double focal_mask_cost(const Tensor& logits, const Tensor& target, double alpha = 0.25,
                              double gamma = 2.0) {
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += focal(logits[i], target[i], alpha, gamma);
  return sum / static_cast<double>(logits.size());
}

// N_q x N_t cost matrix. Both sides must be non-empty.
inline Tensor cost_matrix(const std::vector<Prediction>& preds,
                          const std::vector<InstanceTarget>& targets, const CostWeights& w) {
  if (preds.empty() || targets.empty()) {
    throw ValidationError("cost_matrix needs at least one prediction and one target");
  }
  const Tensor::Dims grid = preds.front().mask_logits.dims();
  for (const auto& p : preds) {
    if (p.mask_logits.rank() != 2 || p.mask_logits.dims() != grid) {
      throw ShapeError("prediction mask " + p.mask_logits.shape_string() +
                       " differs from " + Tensor::shape_string(grid));
    }
  }
  for (const auto& t : targets) {
    if (t.soft_mask.dims() != grid) {
      throw ShapeError("target soft mask " + t.soft_mask.shape_string() +
                       " does not match prediction masks " + Tensor::shape_string(grid));
    }
  }
  Tensor cost({preds.size(), targets.size()});
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const Prediction& p = preds[i];
    const Tensor probs = sigmoid(p.mask_logits);
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const InstanceTarget& t = targets[j];
      const auto cls = static_cast<std::size_t>(t.class_id);
      if (cls >= p.class_probs.size()) {
        throw ValidationError("target class " + std::to_string(t.class_id) +
                              " outside prediction class range");
      }
      double c = 0.0;
      if (w.w_class != 0.0) c += w.w_class * class_cost(p.class_probs[cls], w.focal_alpha, w.focal_gamma);
      if (w.w_l1 != 0.0) c += w.w_l1 * l1_box(p.box, t.box);
      if (w.w_giou != 0.0) c += w.w_giou * -generalized_iou(to_corners(p.box), to_corners(t.box));
      if (w.w_dice != 0.0) {
        c += w.w_dice * detail::dice_cost_from_probs(probs, t.soft_mask, w.dice_eps);
      }
      if (w.w_focal_mask != 0.0) {
        c += w.w_focal_mask *
             focal_mask_cost(p.mask_logits, t.soft_mask, w.focal_alpha, w.focal_gamma);
      }
      cost(i, j) = c;
    }
  }
  return cost;
}

// Hungarian assignment over cost_matrix; no targets or no predictions give
// an empty assignment.
inline Assignment match(const std::vector<Prediction>& preds,
                        const std::vector<InstanceTarget>& targets, const CostWeights& w) {
  if (preds.empty() || targets.empty()) return {};
  return hungarian(cost_matrix(preds, targets, w));
}

}  // namespace dfseg
