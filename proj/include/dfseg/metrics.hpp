#pragma once

// Fixed-threshold evaluation: one-to-one matching of predictions to ground
// truth, precision / recall / F1 and the penalized IoU.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <tuple>
#include <vector>

#include "dfseg/box.hpp"
#include "dfseg/mask.hpp"

namespace dfseg {

enum class IouKind { Mask, Box };

// A prediction or ground-truth object as seen by the evaluator.
struct Detection {
  int class_id = 0;
  double score = 1.0;
  CornerBox box;     // pixels
  BinaryMask mask;   // image resolution; may be empty for box-only data
};

struct EvalConfig {
  double iou_threshold = 0.5;
  IouKind iou_kind = IouKind::Mask;
  double conf_threshold = 0.5;
};

struct EvalOutcome {
  std::size_t tp = 0, fp = 0, fn = 0;
  std::vector<double> matched_ious;  // one per TP

  EvalOutcome& operator+=(const EvalOutcome& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    matched_ious.insert(matched_ious.end(), o.matched_ious.begin(), o.matched_ious.end());
    return *this;
  }
  friend bool operator==(const EvalOutcome&, const EvalOutcome&) = default;
};

// An accepted (pred, gt) pair from the greedy matching.
struct AcceptedMatch {
  std::size_t pred = 0, gt = 0;
  double iou = 0.0;
  bool same_class = false;
};

inline double detection_iou(const Detection& a, const Detection& b, IouKind kind) {
  return kind == IouKind::Mask ? mask_iou(a.mask, b.mask) : box_iou(a.box, b.box);
}

// Greedy one-to-one matching in descending IoU order over pairs with
// IoU > threshold (ties: lower pred index, then lower gt index). Class is
// checked after a pair is accepted: same class is a TP, a class mismatch
// counts one FP and one FN. Leftovers are FPs / FNs.
inline EvalOutcome match_one_to_one(const std::vector<Detection>& preds,
                                    const std::vector<Detection>& gts, const EvalConfig& cfg,
                                    std::vector<AcceptedMatch>* accepted = nullptr) {
  struct Candidate {
    double iou;
    std::size_t pred, gt;
  };
  std::vector<Candidate> cands;
  for (std::size_t p = 0; p < preds.size(); ++p) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double iou = detection_iou(preds[p], gts[g], cfg.iou_kind);
      if (iou > cfg.iou_threshold) cands.push_back({iou, p, g});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.iou, a.pred, a.gt) < std::tie(a.iou, b.pred, b.gt);
  });
  std::vector<char> pred_used(preds.size(), 0), gt_used(gts.size(), 0);
  EvalOutcome out;
  for (const auto& c : cands) {
    if (pred_used[c.pred] || gt_used[c.gt]) continue;
    pred_used[c.pred] = gt_used[c.gt] = 1;
    const bool same = preds[c.pred].class_id == gts[c.gt].class_id;
    if (same) {
      ++out.tp;
      out.matched_ious.push_back(c.iou);
    } else {
      ++out.fp;
      ++out.fn;
    }
    if (accepted) accepted->push_back({c.pred, c.gt, c.iou, same});
  }
  for (char u : pred_used) out.fp += u ? 0 : 1;
  for (char u : gt_used) out.fn += u ? 0 : 1;
  return out;
}

struct PrfScores {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

inline double safe_ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

inline PrfScores prf1_from(double precision, double recall) {
  return {precision, recall, safe_ratio(2.0 * precision * recall, precision + recall)};
}

inline PrfScores prf1(const EvalOutcome& o) {
  const auto tp = static_cast<double>(o.tp);
  return prf1_from(safe_ratio(tp, tp + static_cast<double>(o.fp)),
                   safe_ratio(tp, tp + static_cast<double>(o.fn)));
}

// Mean IoU over TPs + FPs + FNs, where FPs and FNs contribute 0.
inline double penalized_iou(const EvalOutcome& o) {
  const double sum = std::accumulate(o.matched_ious.begin(), o.matched_ious.end(), 0.0);
  return safe_ratio(sum, static_cast<double>(o.tp + o.fp + o.fn));
}

}  // namespace dfseg
