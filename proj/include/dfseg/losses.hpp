#pragma once

// Training losses: box-cropped mask BCE and dice (with analytic gradients),
// the detection terms (varifocal, focal, L1, GIoU) and weighted aggregation
// over the final, auxiliary and denoising branches.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dfseg/box.hpp"
#include "dfseg/error.hpp"
#include "dfseg/hungarian.hpp"
#include "dfseg/target.hpp"
#include "dfseg/tensor.hpp"

namespace dfseg {

// Integer bounds on the mask grid: [x0, x1) x [y0, y1).
struct RoiRect {
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  std::size_t area() const { return (x1 - x0) * (y1 - y0); }
  bool contains(std::size_t y, std::size_t x) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
  friend bool operator==(const RoiRect&, const RoiRect&) = default;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> roi_span(double center, double extent,
                                                    std::size_t grid) {
  const double g = static_cast<double>(grid);
  double lo = std::floor((center - extent / 2) * g);
  double hi = std::ceil((center + extent / 2) * g);
  lo = std::clamp(lo, 0.0, g);
  hi = std::clamp(hi, 0.0, g);
  if (hi <= lo) {
    // Degenerate or off-grid: the single cell holding the (clamped) center.
    lo = std::clamp(std::floor(center * g), 0.0, g - 1.0);
    hi = lo + 1.0;
  }
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

inline void check_roi_inputs(const Tensor& logits, const Tensor& target, const RoiRect& roi) {
  require_rank(logits, 2, "mask logits");
  if (logits.dims() != target.dims()) {
    throw ShapeError("mask loss: logits " + logits.shape_string() + " vs target " +
                     target.shape_string());
  }
  if (roi.x0 >= roi.x1 || roi.y0 >= roi.y1 || roi.x1 > logits.dim(1) || roi.y1 > logits.dim(0)) {
    throw ValidationError("mask loss: ROI outside the " + logits.shape_string() + " grid");
  }
}

// Neumaier-compensated running sum; keeps ROI means accurate to about one
// ulp so finite-difference checks are not swamped by summation noise.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0, comp_ = 0.0;
};

struct DiceSums {
  double pt = 0.0, ps = 0.0, ts = 0.0;
};

inline DiceSums dice_sums(const Tensor& logits, const Tensor& target, const RoiRect& roi) {
  CompensatedSum pt, ps, ts;
  for (std::size_t y = roi.y0; y < roi.y1; ++y) {
    for (std::size_t x = roi.x0; x < roi.x1; ++x) {
      const double p = sigmoid(logits(y, x)), t = target(y, x);
      pt.add(p * t);
      ps.add(p);
      ts.add(t);
    }
  }
  return {pt.value(), ps.value(), ts.value()};
}

// ln(1 + e^x) without overflow.
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace detail

// Projects a normalized box onto a grid_w x grid_h mask grid. Never fails:
// boxes are clamped and widened to at least one cell.
inline RoiRect roi_rect(const Box& box, std::size_t grid_w, std::size_t grid_h) {
  const auto [x0, x1] = detail::roi_span(box.cx, box.w, grid_w);
  const auto [y0, y1] = detail::roi_span(box.cy, box.h, grid_h);
  return {x0, y0, x1, y1};
}

// Mean over ROI pixels of the logit-form binary cross entropy.
inline double bce_roi(const Tensor& logits, const Tensor& target, const RoiRect& roi) {
  detail::check_roi_inputs(logits, target, roi);
  detail::CompensatedSum sum;
  for (std::size_t y = roi.y0; y < roi.y1; ++y) {
    for (std::size_t x = roi.x0; x < roi.x1; ++x) {
      const double z = logits(y, x), t = target(y, x);
      sum.add(std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z))));
    }
  }
  return sum.value() / static_cast<double>(roi.area());
}

// 1 - (2 sum(p t) + eps) / (sum(p) + sum(t) + eps), p = sigmoid(z), over the ROI.
inline double dice_roi(const Tensor& logits, const Tensor& target, const RoiRect& roi,
                       double eps = 1.0) {
  detail::check_roi_inputs(logits, target, roi);
  const auto [pt, ps, ts] = detail::dice_sums(logits, target, roi);
  return 1.0 - (2.0 * pt + eps) / (ps + ts + eps);
}

inline Tensor grad_bce_roi(const Tensor& logits, const Tensor& target, const RoiRect& roi) {
  detail::check_roi_inputs(logits, target, roi);
  Tensor g(logits.dims());
  const double inv_area = 1.0 / static_cast<double>(roi.area());
  for (std::size_t y = roi.y0; y < roi.y1; ++y) {
    for (std::size_t x = roi.x0; x < roi.x1; ++x) {
      g(y, x) = (sigmoid(logits(y, x)) - target(y, x)) * inv_area;
    }
  }
  return g;
}

inline Tensor grad_dice_roi(const Tensor& logits, const Tensor& target, const RoiRect& roi,
                            double eps = 1.0) {
  detail::check_roi_inputs(logits, target, roi);
  const auto [pt, ps, ts] = detail::dice_sums(logits, target, roi);
  const double num = 2.0 * pt + eps;
  const double den = ps + ts + eps;
  Tensor g(logits.dims());
  for (std::size_t y = roi.y0; y < roi.y1; ++y) {
    for (std::size_t x = roi.x0; x < roi.x1; ++x) {
      const double p = sigmoid(logits(y, x));
      const double dloss_dp = -(2.0 * target(y, x) * den - num) / (den * den);
      g(y, x) = dloss_dp * p * (1.0 - p);
    }
  }
  return g;
}

// Varifocal loss for one logit. Positives (q > 0) are weighted by q,
// negatives by alpha * p^gamma.
inline double vfl(double logit, double quality, double alpha = 0.75, double gamma = 2.0) {
  const double p = sigmoid(logit);
  const double neg_log_p = detail::softplus(-logit);
  const double neg_log_1mp = detail::softplus(logit);
  if (quality > 0.0) return quality * (quality * neg_log_p + (1.0 - quality) * neg_log_1mp);
  return alpha * std::pow(p, gamma) * neg_log_1mp;
}

// Sigmoid focal loss, linear in a possibly fractional target.
inline double focal(double logit, double target, double alpha = 0.25, double gamma = 2.0) {
  const double p = sigmoid(logit);
  return target * alpha * std::pow(1.0 - p, gamma) * detail::softplus(-logit) +
         (1.0 - target) * (1.0 - alpha) * std::pow(p, gamma) * detail::softplus(logit);
}

inline double l1_box(const Box& pred, const Box& target) {
  return std::abs(pred.cx - target.cx) + std::abs(pred.cy - target.cy) +
         std::abs(pred.w - target.w) + std::abs(pred.h - target.h);
}

inline double giou_loss(const Box& pred, const Box& target) {
  return 1.0 - generalized_iou(to_corners(pred), to_corners(target));
}

struct LossWeights {
  double vfl = 1.0;
  double l1 = 5.0;
  double giou = 2.0;
  double fgl = 0.15;
  double ddf = 1.5;
  double mask_bce = 1.0;
  double mask_dice = 1.0;
  double focal = 0.0;  // optional classification term, off by default

  double weight_of(std::string_view term) const {
    if (term == "vfl") return vfl;
    if (term == "l1") return l1;
    if (term == "giou") return giou;
    if (term == "fgl") return fgl;
    if (term == "ddf") return ddf;
    if (term == "mask_bce") return mask_bce;
    if (term == "mask_dice") return mask_dice;
    if (term == "focal") return focal;
    throw ValidationError("unknown loss term: " + std::string(term));
  }
};

inline constexpr std::array<std::string_view, 8> kLossTerms{
    "vfl", "l1", "giou", "fgl", "ddf", "mask_bce", "mask_dice", "focal"};

// Per-term sums over one supervision branch (final layer, an auxiliary
// layer, or the denoising queries). fgl/ddf are supplied externally.
struct LossBranch {
  std::string name;
  std::map<std::string, double> sums;
  std::size_t matched = 0;
};

struct LossBreakdown {
  double total = 0.0;
  std::map<std::string, double> terms;  // "<branch>/<term>" -> weighted mean

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : terms) j[k] = v;
    j["total"] = total;
    return j;
  }
};

// Each term is averaged over the branch's matched instances and weighted.
// A branch with no matched instances contributes 0. Branches are summed in
// the order given.
inline LossBreakdown aggregate(const std::vector<LossBranch>& branches, const LossWeights& w) {
  LossBreakdown out;
  for (const auto& b : branches) {
    for (const auto& [term, sum] : b.sums) {
      const double weight = w.weight_of(term);
      const double value = b.matched ? weight * sum / static_cast<double>(b.matched) : 0.0;
      out.terms[b.name + "/" + term] = value;
      out.total += value;
    }
  }
  return out;
}

// Per-branch inputs for compute_branch.
struct BranchPredictions {
  Tensor class_logits;      // Q x num_classes
  std::vector<Box> boxes;   // Q
  Tensor mask_logits;       // Q x h x w
};

// Loss sums for one branch given its matching. `quality` holds the varifocal
// target score per matched pair (same order as assignment.pairs). Unmatched
// queries enter the varifocal term as negatives.
inline LossBranch compute_branch(std::string name, const BranchPredictions& preds,
                                 const std::vector<InstanceTarget>& targets,
                                 const Assignment& assignment, const std::vector<double>& quality,
                                 double dice_eps = 1.0) {
  detail::require_rank(preds.class_logits, 2, "class logits");
  detail::require_rank(preds.mask_logits, 3, "mask logits");
  const std::size_t q = preds.class_logits.dim(0), k = preds.class_logits.dim(1);
  if (preds.boxes.size() != q || preds.mask_logits.dim(0) != q) {
    throw ShapeError("branch predictions disagree on query count");
  }
  if (quality.size() != assignment.pairs.size()) {
    throw ValidationError("one quality score is needed per matched pair");
  }
  const std::size_t h = preds.mask_logits.dim(1), w = preds.mask_logits.dim(2);
  Tensor score_target({q, k});
  for (std::size_t m = 0; m < assignment.pairs.size(); ++m) {
    const auto [qi, ti] = assignment.pairs[m];
    const auto cls = static_cast<std::size_t>(targets.at(ti).class_id);
    if (cls >= k) throw ValidationError("target class outside the classifier range");
    score_target(qi, cls) = quality[m];
  }
  LossBranch b;
  b.name = std::move(name);
  b.matched = assignment.pairs.size();
  double vfl_sum = 0.0;
  for (std::size_t i = 0; i < q * k; ++i) vfl_sum += vfl(preds.class_logits[i], score_target[i]);
  double l1 = 0.0, giou = 0.0, bce = 0.0, dice = 0.0;
  for (const auto& [qi, ti] : assignment.pairs) {
    const InstanceTarget& t = targets.at(ti);
    if (t.soft_mask.dims() != Tensor::Dims{h, w}) {
      throw ShapeError("soft mask " + t.soft_mask.shape_string() + " does not match logits grid");
    }
    l1 += l1_box(preds.boxes[qi], t.box);
    giou += giou_loss(preds.boxes[qi], t.box);
    const Tensor logits = preds.mask_logits.slice(qi);
    const RoiRect roi = roi_rect(t.box, w, h);
    bce += bce_roi(logits, t.soft_mask, roi);
    dice += dice_roi(logits, t.soft_mask, roi, dice_eps);
  }
  b.sums = {{"vfl", vfl_sum}, {"l1", l1}, {"giou", giou}, {"mask_bce", bce}, {"mask_dice", dice}};
  return b;
}

}  // namespace dfseg
