#pragma once

// Command-line front end. Exit status: 0 success, 1 invalid input or
// arguments, 2 file-system failures. Diagnostics go to the error stream.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dfseg/bench.hpp"
#include "dfseg/config.hpp"
#include "dfseg/dataset.hpp"
#include "dfseg/eval.hpp"
#include "dfseg/labels.hpp"
#include "dfseg/mask_head.hpp"
#include "dfseg/parallel.hpp"
#include "dfseg/predictions.hpp"
#include "dfseg/random.hpp"
#include "dfseg/rle.hpp"

namespace dfseg {

namespace detail {

inline std::uint64_t fnv1a(const Tensor& t) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : t.values()) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

inline std::string describe(const std::string& label, const Tensor& t) {
  double sum = 0.0;
  for (double v : t.values()) sum += v;
  char buf[160];
  std::snprintf(buf, sizeof buf, " sum=%.17g fnv1a=%016llx\n", sum,
                static_cast<unsigned long long>(fnv1a(t)));
  return label + " " + t.shape_string() + buf;
}

inline void write_output(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw IoError("cannot write output: " + out_path);
  f << text;
  if (!f) throw IoError("failed writing output: " + out_path);
}

inline DatasetIndex dataset_from(const AppConfig& cfg) {
  if (cfg.dataset.root.empty()) throw ValidationError("config lacks [dataset] root");
  return load_dataset(cfg.dataset.root, cfg.dataset.images, cfg.dataset.labels, cfg.dataset.classes);
}

inline EvalOptions eval_options_from(const AppConfig& cfg, std::size_t workers_override) {
  EvalOptions opt;
  opt.config = cfg.eval;
  opt.ap.max_det = cfg.max_det;
  opt.ap.score_floor = cfg.score_floor;
  opt.workers = workers_override ? workers_override : cfg.workers;
  return opt;
}

inline std::string run_eval_command(const std::string& config_path, std::size_t workers) {
  const AppConfig cfg = load_config(config_path);
  if (cfg.predictions.empty()) throw ValidationError("config lacks [eval] predictions");
  const DatasetIndex dataset = dataset_from(cfg);
  const PredictionSet preds = load_predictions(cfg.predictions);
  const EvalReport report = run_eval(dataset, preds, eval_options_from(cfg, workers));
  std::string text = emit_eval_report(report, cfg.model_name, cfg.format);
  const std::vector<std::string> header{"Image", "TP", "FP", "FN"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& img : report.per_image) {
    rows.push_back({img.id, std::to_string(img.outcome.tp), std::to_string(img.outcome.fp),
                    std::to_string(img.outcome.fn)});
  }
  return text + "\n" + render_table(header, rows, cfg.format);
}

inline std::string run_bench_command(const std::string& config_path, std::size_t workers) {
  const AppConfig cfg = load_config(config_path);
  const DatasetIndex dataset = dataset_from(cfg);
  std::unique_ptr<Predictor> predictor;
  if (cfg.predictor == "replay") {
    if (cfg.replay.empty()) throw ValidationError("replay predictor needs [bench] replay");
    predictor = std::make_unique<ReplayPredictor>(load_predictions(cfg.replay));
  } else {
    StubSettings s;
    s.input_size = {cfg.model.input_height, cfg.model.input_width};
    s.embed_dim = cfg.model.embed_dim;
    s.hidden_dim = cfg.model.hidden_dim;
    s.queries = cfg.model.queries;
    s.layers = cfg.model.layers;
    s.norm_groups = cfg.model.norm_groups;
    s.num_classes = dataset.class_names.size();
    s.seed = cfg.model.seed;
    s.norm_mean = cfg.model.norm_mean;
    s.norm_std = cfg.model.norm_std;
    s.conf_threshold = cfg.eval.conf_threshold;
    s.mask_threshold = cfg.mask_threshold;
    predictor = std::make_unique<StubPredictor>(s);
  }
  const BenchResult result =
      run_bench(dataset, *predictor, cfg.warmup, eval_options_from(cfg, workers), cfg.model_name);
  return emit_report(BenchReport{{result.row}}, cfg.format);
}

inline std::string run_rasterize_command(const std::string& labels_dir, const std::string& images_dir,
                                         std::size_t width, std::size_t height,
                                         std::size_t num_classes) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(labels_dir)) throw IoError("label directory not found: " + labels_dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(labels_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  PredictionSet set;
  for (const auto& f : files) {
    const std::string id = f.stem().string();
    std::size_t w = width, h = height;
    if (!images_dir.empty()) {
      fs::path img = fs::path(images_dir) / (id + ".ppm");
      if (!fs::exists(img)) img = fs::path(images_dir) / (id + ".pgm");
      const NetpbmImage pic = read_netpbm(img);
      w = pic.width;
      h = pic.height;
    }
    auto& records = set[id];
    for (const auto& t : load_yolo_seg_labels(f, w, h, num_classes)) {
      const CornerBox c = to_corners(t.box);
      records.push_back({t.class_id, 1.0,
                         {c.x0 * static_cast<double>(w), c.y0 * static_cast<double>(h),
                          c.x1 * static_cast<double>(w), c.y1 * static_cast<double>(h)},
                         rle_encode(t.mask)});
    }
  }
  return dump_predictions(set);
}

// Seeded synthetic pyramid and queries through the mask head. Per-layer
// logits are computed on the worker pool; the output does not depend on it.
inline std::string run_forward_demo(std::uint64_t seed, const ModelSettings& m, std::size_t workers) {
  MaskHeadConfig head;
  head.embed_dim = m.embed_dim;
  head.hidden_dim = m.hidden_dim;
  head.norm_groups = m.norm_groups;
  head.strides = {8, 16, 32};
  head.level_channels = {8, 16, 32};
  head.validate();
  if (m.input_height % 32 || m.input_width % 32 || m.input_height == 0 || m.input_width == 0) {
    throw ValidationError("forward-demo input size must be a positive multiple of 32");
  }
  if (m.layers == 0 || m.queries == 0) throw ValidationError("forward-demo needs layers and queries");
  UniformSource rng(seed);
  FeaturePyramid pyr{{}, m.input_height, m.input_width};
  for (std::size_t l = 0; l < head.strides.size(); ++l) {
    pyr.levels.push_back(rng.tensor(
        {head.level_channels[l], m.input_height / head.strides[l], m.input_width / head.strides[l]},
        -1.0, 1.0));
  }
  QuerySet queries;
  queries.hidden = rng.tensor({m.layers, m.queries, m.hidden_dim}, -1.0, 1.0);
  const MaskHeadParams params = random_params(head, seed + 1);

  const Tensor features = build_pixel_features(pyr, params, head);
  const Tensor emb = embed_queries(queries, params);
  std::vector<Tensor> per_layer(m.layers);
  parallel_for(m.layers, workers, [&](std::size_t l) {
    per_layer[l] = mask_logits(emb.slice(l), features, default_logit_scale(head.embed_dim));
  });
  Tensor logits({m.layers, m.queries, features.dim(1), features.dim(2)});
  for (std::size_t l = 0; l < m.layers; ++l) logits.set_slice(l, per_layer[l]);

  std::string text = "forward-demo seed=" + std::to_string(seed) + " input=" +
                     std::to_string(m.input_height) + "x" + std::to_string(m.input_width) + "\n";
  for (std::size_t l = 0; l < pyr.levels.size(); ++l) {
    text += describe("level" + std::to_string(l), pyr.levels[l]);
  }
  text += describe("pixel_features", features);
  text += describe("query_embeddings", emb);
  text += describe("mask_logits", logits);
  return text;
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Instance-segmentation evaluation and benchmark harness", "dfseg"};
  app.require_subcommand(1);
  std::string config, out_path, labels_dir, images_dir;
  std::size_t workers = 0, width = 640, height = 640, num_classes = 1;
  std::uint64_t seed = 7;

  auto* eval = app.add_subcommand("eval", "Score a prediction file against the dataset");
  eval->add_option("--config", config, "Settings file")->required();
  eval->add_option("--out", out_path, "Write the report here instead of stdout");
  eval->add_option("--workers", workers, "Worker threads (overrides the config)");

  auto* bench = app.add_subcommand("bench", "Run the latency benchmark");
  bench->add_option("--config", config, "Settings file")->required();
  bench->add_option("--out", out_path, "Write the report here instead of stdout");
  bench->add_option("--workers", workers, "Worker threads for the accuracy pass");

  auto* raster = app.add_subcommand("rasterize", "Convert polygon labels to RLE prediction JSON");
  raster->add_option("--labels", labels_dir, "Directory of label files")->required();
  raster->add_option("--out", out_path, "Output JSON file")->required();
  raster->add_option("--images", images_dir, "Image directory supplying per-image sizes");
  raster->add_option("--width", width, "Image width when --images is absent");
  raster->add_option("--height", height, "Image height when --images is absent");
  raster->add_option("--num-classes", num_classes, "Number of classes");

  auto* demo = app.add_subcommand("forward-demo", "Mask-head forward on seeded synthetic inputs");
  demo->add_option("--seed", seed, "Random seed")->required();
  demo->add_option("--config", config, "Optional settings file ([model] section)");
  demo->add_option("--out", out_path, "Write the summary here instead of stdout");
  demo->add_option("--workers", workers, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*eval) {
      detail::write_output(detail::run_eval_command(config, workers), out_path, out);
    } else if (*bench) {
      detail::write_output(detail::run_bench_command(config, workers), out_path, out);
    } else if (*raster) {
      if (width == 0 || height == 0 || num_classes == 0) {
        throw ValidationError("--width, --height and --num-classes must be positive");
      }
      detail::write_output(
          detail::run_rasterize_command(labels_dir, images_dir, width, height, num_classes), out_path,
          out);
    } else if (*demo) {
      const ModelSettings model = config.empty() ? ModelSettings{} : load_config(config).model;
      detail::write_output(detail::run_forward_demo(seed, model, workers ? workers : 1), out_path, out);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace dfseg
