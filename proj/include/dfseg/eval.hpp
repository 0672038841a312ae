#pragma once

// Dataset-level evaluation: per-image one-to-one matching at a fixed
// confidence threshold, summed outcomes, and COCO-style AP.

#include <cstddef>
#include <string>
#include <vector>

#include "dfseg/coco_ap.hpp"
#include "dfseg/dataset.hpp"
#include "dfseg/error.hpp"
#include "dfseg/metrics.hpp"
#include "dfseg/parallel.hpp"
#include "dfseg/predictions.hpp"

namespace dfseg {

struct ImageOutcome {
  std::string id;
  EvalOutcome outcome;
};

struct EvalReport {
  EvalOutcome total;
  PrfScores scores;
  double penalized_iou = 0.0;
  CocoApResult ap;
  std::vector<ImageOutcome> per_image;
};

struct EvalOptions {
  EvalConfig config;
  CocoApConfig ap;
  std::size_t workers = 1;
};

inline Detection to_detection(const PredictionRecord& r) {
  return {r.class_id, r.score, r.box, r.decoded_mask()};
}

// Scores already-materialized detections; images[i] pairs with preds[i] and
// gts[i].
inline EvalReport evaluate_detections(const std::vector<std::string>& ids,
                                      const std::vector<std::vector<Detection>>& preds,
                                      const std::vector<std::vector<Detection>>& gts,
                                      const EvalOptions& opt) {
  const std::size_t n = ids.size();
  std::vector<EvalOutcome> outcomes(n);
  parallel_for(n, opt.workers, [&](std::size_t i) {
    std::vector<Detection> kept;
    for (const auto& d : preds[i]) {
      if (d.score >= opt.config.conf_threshold) kept.push_back(d);
    }
    outcomes[i] = match_one_to_one(kept, gts[i], opt.config);
  });
  EvalReport report;
  for (std::size_t i = 0; i < n; ++i) {
    report.total += outcomes[i];
    report.per_image.push_back({ids[i], std::move(outcomes[i])});
  }
  report.scores = prf1(report.total);
  report.penalized_iou = penalized_iou(report.total);
  CocoApConfig ap = opt.ap;
  ap.iou_kind = opt.config.iou_kind;
  report.ap = coco_ap(preds, gts, ap);
  return report;
}

inline EvalReport run_eval(const DatasetIndex& dataset, const PredictionSet& predictions,
                           const EvalOptions& opt) {
  std::vector<std::string> unknown;
  for (const auto& [id, _] : predictions) {
    bool found = false;
    for (const auto& e : dataset.images) found = found || e.id == id;
    if (!found) unknown.push_back(id);
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& id : unknown) list += (list.empty() ? "" : ", ") + id;
    throw ValidationError("predictions reference unknown image ids: " + list);
  }
  const std::size_t n = dataset.images.size();
  std::vector<std::string> ids(n);
  std::vector<std::vector<Detection>> preds(n), gts(n);
  parallel_for(n, opt.workers, [&](std::size_t i) {
    const ImageEntry& e = dataset.images[i];
    ids[i] = e.id;
    gts[i] = ground_truth_detections(e, dataset.class_names.size());
    if (const auto it = predictions.find(e.id); it != predictions.end()) {
      for (const auto& r : it->second) {
        Detection d = to_detection(r);
        if (opt.config.iou_kind == IouKind::Mask &&
            (d.mask.height != e.height || d.mask.width != e.width)) {
          throw ValidationError("prediction mask for image " + e.id + " is " +
                                std::to_string(d.mask.height) + "x" + std::to_string(d.mask.width) +
                                ", image is " + std::to_string(e.height) + "x" +
                                std::to_string(e.width));
        }
        preds[i].push_back(std::move(d));
      }
    }
  });
  return evaluate_detections(ids, preds, gts, opt);
}

}  // namespace dfseg
