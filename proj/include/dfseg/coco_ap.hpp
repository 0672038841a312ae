#pragma once

// COCO-style average precision: IoU thresholds 0.50:0.05:0.95, 101-point
// interpolated precision, per-category greedy matching by score.

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "dfseg/metrics.hpp"

namespace dfseg {

struct CocoApConfig {
  IouKind iou_kind = IouKind::Mask;
  std::size_t max_det = 100;  // per image and category
  double score_floor = 0.01;
};

struct CocoApResult {
  double map_50_95 = 0.0;
  double map_50 = 0.0;
};

inline std::array<double, 10> coco_iou_thresholds() {
  // Same values as numpy.linspace(0.5, 0.95, 10).
  std::array<double, 10> t{};
  const double step = (0.95 - 0.5) / 9.0;
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.5 + static_cast<double>(i) * step;
  t[9] = 0.95;
  return t;
}

namespace detail {

struct ScoredHit {
  double score;
  std::array<char, 10> matched;
};

}  // namespace detail

// preds[i] and gts[i] belong to image i.
inline CocoApResult coco_ap(const std::vector<std::vector<Detection>>& preds,
                            const std::vector<std::vector<Detection>>& gts,
                            const CocoApConfig& cfg = {}) {
  const auto thresholds = coco_iou_thresholds();
  std::set<int> classes;
  for (const auto& img : gts) {
    for (const auto& g : img) classes.insert(g.class_id);
  }
  const std::size_t images = std::max(preds.size(), gts.size());
  static const std::vector<Detection> kNone;

  std::vector<std::array<double, 10>> per_class;
  for (int cls : classes) {
    std::vector<detail::ScoredHit> hits;
    std::size_t gt_count = 0;
    for (std::size_t im = 0; im < images; ++im) {
      const auto& pimg = im < preds.size() ? preds[im] : kNone;
      const auto& gimg = im < gts.size() ? gts[im] : kNone;
      std::vector<const Detection*> g, d;
      for (const auto& x : gimg) {
        if (x.class_id == cls) g.push_back(&x);
      }
      for (const auto& x : pimg) {
        if (x.class_id == cls && x.score >= cfg.score_floor) d.push_back(&x);
      }
      gt_count += g.size();
      std::stable_sort(d.begin(), d.end(),
                       [](const Detection* a, const Detection* b) { return a->score > b->score; });
      if (d.size() > cfg.max_det) d.resize(cfg.max_det);
      std::vector<double> ious(d.size() * g.size());
      for (std::size_t di = 0; di < d.size(); ++di) {
        for (std::size_t gi = 0; gi < g.size(); ++gi) {
          ious[di * g.size() + gi] = detection_iou(*d[di], *g[gi], cfg.iou_kind);
        }
      }
      std::vector<detail::ScoredHit> img_hits(d.size());
      for (std::size_t di = 0; di < d.size(); ++di) img_hits[di].score = d[di]->score;
      for (std::size_t t = 0; t < thresholds.size(); ++t) {
        std::vector<char> gt_taken(g.size(), 0);
        for (std::size_t di = 0; di < d.size(); ++di) {
          double best = std::min(thresholds[t], 1.0 - 1e-10);
          std::size_t m = g.size();
          for (std::size_t gi = 0; gi < g.size(); ++gi) {
            if (gt_taken[gi]) continue;
            const double iou = ious[di * g.size() + gi];
            if (iou < best) continue;
            best = iou;
            m = gi;
          }
          img_hits[di].matched[t] = m < g.size();
          if (m < g.size()) gt_taken[m] = 1;
        }
      }
      hits.insert(hits.end(), img_hits.begin(), img_hits.end());
    }
    if (gt_count == 0) continue;
    std::stable_sort(hits.begin(), hits.end(), [](const detail::ScoredHit& a,
                                                  const detail::ScoredHit& b) {
      return a.score > b.score;
    });
    std::array<double, 10> ap{};
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      const std::size_t nd = hits.size();
      std::vector<double> recall(nd), precision(nd);
      double tp = 0.0, fp = 0.0;
      for (std::size_t i = 0; i < nd; ++i) {
        (hits[i].matched[t] ? tp : fp) += 1.0;
        recall[i] = tp / static_cast<double>(gt_count);
        precision[i] = tp / (tp + fp);
      }
      for (std::size_t i = nd; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
      double sum = 0.0;
      for (std::size_t r = 0; r <= 100; ++r) {
        // numpy.linspace(0, 1, 101) sample points.
        const double level = r == 100 ? 1.0 : static_cast<double>(r) * 0.01;
        const auto it = std::lower_bound(recall.begin(), recall.end(), level);
        if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
      }
      ap[t] = sum / 101.0;
    }
    per_class.push_back(ap);
  }
  CocoApResult out;
  if (per_class.empty()) return out;
  double all = 0.0, at50 = 0.0;
  for (const auto& ap : per_class) {
    all += std::accumulate(ap.begin(), ap.end(), 0.0);
    at50 += ap[0];
  }
  out.map_50_95 = all / static_cast<double>(per_class.size() * thresholds.size());
  out.map_50 = at50 / static_cast<double>(per_class.size());
  return out;
}

}  // namespace dfseg
