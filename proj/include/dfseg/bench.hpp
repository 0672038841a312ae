#pragma once

// End-to-end latency benchmark. Per image: load from disk (untimed), sync,
// start clock, predict (preprocess + forward + postprocess), sync, stop.
// The first `warmup` images are excluded from timing statistics; accuracy
// is computed from the very outputs that were timed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "dfseg/config.hpp"
#include "dfseg/dataset.hpp"
#include "dfseg/error.hpp"
#include "dfseg/eval.hpp"
#include "dfseg/mask_head.hpp"
#include "dfseg/postprocess.hpp"
#include "dfseg/predictions.hpp"
#include "dfseg/random.hpp"

namespace dfseg {

using Clock = std::chrono::steady_clock;

struct PredictOutput {
  std::vector<Instance> instances;
  Clock::duration raw_forward{};  // forward pass only
};

struct BenchImage {
  const ImageEntry* entry = nullptr;
  Tensor pixels;  // channels x H x W, 0..255
};

class Predictor {
 public:
  virtual ~Predictor() = default;
  // Device synchronization point; no-op for in-process predictors.
  virtual void sync() {}
  virtual PredictOutput predict(const BenchImage& image) = 0;
};

struct StubSettings {
  ImageSize input_size{64, 64};
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 32;
  std::size_t queries = 10;
  std::size_t layers = 3;
  std::size_t norm_groups = 32;
  std::size_t num_classes = 1;
  std::uint64_t seed = 7;
  double norm_mean = 0.0;
  double norm_std = 1.0;
  double conf_threshold = 0.5;
  double mask_threshold = 0.5;
};

// Seeded mask head over a pyramid synthesized from the resized image, a
// seeded linear class head on the last decoder layer and fixed per-query
// boxes, followed by the regular postprocessing.
class StubPredictor : public Predictor {
 public:
  explicit StubPredictor(const StubSettings& s) : settings_(s) {
    if (s.num_classes == 0) throw ValidationError("stub predictor needs at least one class");
    head_.embed_dim = s.embed_dim;
    head_.hidden_dim = s.hidden_dim;
    head_.norm_groups = s.norm_groups;
    head_.strides = {8, 16, 32};
    head_.level_channels = {3, 3, 3};
    head_.validate();
    for (std::size_t stride : head_.strides) {
      if (s.input_size.height % stride || s.input_size.width % stride) {
        throw ValidationError("stub input size must be divisible by 32");
      }
    }
    params_ = random_params(head_, s.seed);
    UniformSource rng(s.seed ^ 0x9e3779b97f4a7c15ULL);
    queries_.hidden = rng.tensor({s.layers, s.queries, s.hidden_dim}, -1.0, 1.0);
    class_weight_ = rng.tensor({s.embed_dim, s.num_classes}, -1.0, 1.0);
    for (std::size_t q = 0; q < s.queries; ++q) {
      boxes_.push_back({rng.uniform(0.25, 0.75), rng.uniform(0.25, 0.75), rng.uniform(0.1, 0.5),
                        rng.uniform(0.1, 0.5)});
    }
  }

  PredictOutput predict(const BenchImage& image) override {
    const Tensor& px = image.pixels;
    detail::require_rank(px, 3, "image");
    Tensor rgb = px.dim(0) == 3 ? px : Tensor({3, px.dim(1), px.dim(2)});
    if (px.dim(0) == 1) {
      for (std::size_t c = 0; c < 3; ++c) rgb.set_slice(c, px.slice(0));
    } else if (px.dim(0) != 3) {
      throw ValidationError("stub predictor expects 1 or 3 channels");
    }
    const std::size_t h = settings_.input_size.height, w = settings_.input_size.width;
    Tensor input = bilinear_resize(rgb, h, w);
    for (double& v : input.values()) v = (v / 255.0 - settings_.norm_mean) / settings_.norm_std;
    FeaturePyramid pyr{{}, h, w};
    for (std::size_t stride : head_.strides) {
      pyr.levels.push_back(bilinear_resize(input, h / stride, w / stride));
    }

    PredictOutput out;
    const auto t0 = Clock::now();
    const MaskOutput mo = forward(pyr, queries_, params_, head_);
    const Tensor emb = embed_queries(queries_, params_).slice(settings_.layers - 1);
    const Tensor class_logits = matmul(emb, class_weight_);
    out.raw_forward = Clock::now() - t0;

    RawDetections raw;
    raw.mask_logits = mo.logits.slice(settings_.layers - 1);
    const std::size_t k = settings_.num_classes;
    for (std::size_t q = 0; q < settings_.queries; ++q) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c) {
        if (class_logits(q, c) > class_logits(q, best)) best = c;
      }
      raw.scores.push_back(sigmoid(class_logits(q, best)));
      raw.class_ids.push_back(static_cast<int>(best));
      raw.boxes.push_back(boxes_[q]);
    }
    PostprocessConfig pp;
    pp.conf_threshold = settings_.conf_threshold;
    pp.mask_threshold = settings_.mask_threshold;
    pp.input_size = settings_.input_size;
    pp.original_size = {px.dim(1), px.dim(2)};
    out.instances = postprocess(raw, pp);
    return out;
  }

 private:
  StubSettings settings_;
  MaskHeadConfig head_;
  MaskHeadParams params_;
  QuerySet queries_;
  Tensor class_weight_;
  std::vector<Box> boxes_;
};

// Returns stored outputs for each image id; the forward pass is empty.
class ReplayPredictor : public Predictor {
 public:
  explicit ReplayPredictor(PredictionSet stored) : stored_(std::move(stored)) {}

  PredictOutput predict(const BenchImage& image) override {
    PredictOutput out;
    const auto it = stored_.find(image.entry->id);
    if (it == stored_.end()) return out;
    for (const auto& r : it->second) {
      out.instances.push_back({r.class_id, r.score, r.box, r.decoded_mask()});
    }
    return out;
  }

 private:
  PredictionSet stored_;
};

struct BenchSample {
  std::string id;
  double end_to_end_ms = 0.0;
  double raw_ms = 0.0;
};

struct BenchRow {
  std::string model;
  double f1 = 0.0, iou = 0.0, precision = 0.0, recall = 0.0;
  double latency_ms = 0.0;      // mean end-to-end
  double raw_latency_ms = 0.0;  // mean forward only
  double p50_ms = 0.0, p95_ms = 0.0;
  std::size_t samples = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
};

struct BenchResult {
  BenchRow row;
  std::vector<BenchSample> samples;  // post-warmup only
  EvalReport accuracy;
};

// Linear interpolation between closest ranks (numpy's default).
inline double percentile(std::vector<double> values, double pct) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return std::lerp(values[lo], values[hi], pos - static_cast<double>(lo));
}

inline Detection to_detection(const Instance& inst) {
  return {inst.class_id, inst.score, inst.box_px, inst.mask};
}

inline BenchResult run_bench(const DatasetIndex& dataset, Predictor& predictor, std::size_t warmup,
                             const EvalOptions& eval, const std::string& model_name) {
  const std::size_t n = dataset.images.size();
  if (n == 0) throw ValidationError("benchmark needs a non-empty dataset");
  if (warmup >= n) {
    throw ValidationError("warmup (" + std::to_string(warmup) + ") must be smaller than the dataset (" +
                          std::to_string(n) + " images)");
  }
  std::vector<std::vector<Detection>> gts(n), preds(n);
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = dataset.images[i].id;
    gts[i] = ground_truth_detections(dataset.images[i], dataset.class_names.size());
  }

  BenchResult result;
  using Ms = std::chrono::duration<double, std::milli>;
  for (std::size_t i = 0; i < n; ++i) {
    const ImageEntry& entry = dataset.images[i];
    BenchImage image{&entry, read_netpbm(entry.image_path).to_tensor()};
    PredictOutput out;
    predictor.sync();
    const auto t0 = Clock::now();
    try {
      out = predictor.predict(image);
    } catch (const std::exception& e) {
      throw Error("predictor failed on image " + entry.id + ": " + e.what());
    }
    predictor.sync();
    const auto t1 = Clock::now();
    if (i >= warmup) {
      result.samples.push_back({entry.id, Ms(t1 - t0).count(), Ms(out.raw_forward).count()});
    }
    for (const auto& inst : out.instances) preds[i].push_back(to_detection(inst));
  }

  result.accuracy = evaluate_detections(ids, preds, gts, eval);
  BenchRow& row = result.row;
  row.model = model_name;
  row.f1 = result.accuracy.scores.f1;
  row.iou = result.accuracy.penalized_iou;
  row.precision = result.accuracy.scores.precision;
  row.recall = result.accuracy.scores.recall;
  row.samples = result.samples.size();
  std::vector<double> e2e, raw;
  for (const auto& s : result.samples) {
    e2e.push_back(s.end_to_end_ms);
    raw.push_back(s.raw_ms);
  }
  const auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  row.latency_ms = mean(e2e);
  row.raw_latency_ms = mean(raw);
  row.p50_ms = percentile(e2e, 50.0);
  row.p95_ms = percentile(e2e, 95.0);
  return result;
}

namespace detail {

inline std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline std::string render_table(const std::vector<std::string>& header,
                                const std::vector<std::vector<std::string>>& rows,
                                ReportFormat format) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    if (format == ReportFormat::Csv) {
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    } else {
      out += "|";
      for (const auto& c : cells) out += " " + c + " |";
    }
    out += "\n";
  };
  line(header);
  if (format == ReportFormat::Markdown) {
    out += "|";
    for (std::size_t i = 0; i < header.size(); ++i) out += i ? "---:|" : "---|";
    out += "\n";
  }
  for (const auto& r : rows) line(r);
  return out;
}

}  // namespace detail

// Metrics to 3 decimals, latencies to 1 decimal.
inline std::string emit_report(const BenchReport& report, ReportFormat format) {
  const std::vector<std::string> header{"Model",   "F1-score",     "IoU",
                                        "Precision", "Recall",     "Latency (ms)",
                                        "Raw inference latency (ms)", "p50 (ms)",
                                        "p95 (ms)", "Samples"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : report.rows) {
    rows.push_back({r.model, detail::fixed(r.f1, 3), detail::fixed(r.iou, 3),
                    detail::fixed(r.precision, 3), detail::fixed(r.recall, 3),
                    detail::fixed(r.latency_ms, 1), detail::fixed(r.raw_latency_ms, 1),
                    detail::fixed(r.p50_ms, 1), detail::fixed(r.p95_ms, 1),
                    std::to_string(r.samples)});
  }
  return detail::render_table(header, rows, format);
}

inline std::string emit_eval_report(const EvalReport& report, const std::string& model,
                                    ReportFormat format) {
  const std::vector<std::string> header{"Model", "F1-score", "IoU", "Precision", "Recall",
                                        "TP",    "FP",       "FN",  "mAP@50-95", "mAP@50"};
  const auto& t = report.total;
  const std::vector<std::vector<std::string>> rows{
      {model, detail::fixed(report.scores.f1, 3), detail::fixed(report.penalized_iou, 3),
       detail::fixed(report.scores.precision, 3), detail::fixed(report.scores.recall, 3),
       std::to_string(t.tp), std::to_string(t.fp), std::to_string(t.fn),
       detail::fixed(report.ap.map_50_95, 3), detail::fixed(report.ap.map_50, 3)}};
  return detail::render_table(header, rows, format);
}

}  // namespace dfseg
