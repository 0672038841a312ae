#pragma once

// Single settings file for the harness: UTF-8 "key = value" lines grouped
// under "[section]" headers. '#' and ';' start comment lines. Unknown
// sections or keys are errors. Relative paths resolve against the
// directory holding the file.
//
//   [dataset]      root, images, labels, classes
//   [eval]         predictions, iou_threshold, iou_kind (mask|box),
//                  conf_threshold, workers, max_det, score_floor
//   [postprocess]  mask_threshold
//   [bench]        warmup, predictor (stub|replay), model_name, replay
//   [model]        input_height, input_width, embed_dim, hidden_dim,
//                  queries, layers, norm_groups, seed, norm_mean, norm_std
//   [report]       format (markdown|csv)

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "dfseg/error.hpp"
#include "dfseg/metrics.hpp"

namespace dfseg {

enum class ReportFormat { Markdown, Csv };

struct DatasetSettings {
  std::filesystem::path root;
  std::string images = "images";
  std::string labels = "labels";
  std::string classes = "classes.txt";
};

struct ModelSettings {
  std::size_t input_height = 64;
  std::size_t input_width = 64;
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 32;
  std::size_t queries = 10;
  std::size_t layers = 3;
  std::size_t norm_groups = 32;
  std::uint64_t seed = 7;
  double norm_mean = 0.0;
  double norm_std = 1.0;
};

struct AppConfig {
  DatasetSettings dataset;
  std::filesystem::path predictions;
  EvalConfig eval;
  std::size_t workers = 1;
  std::size_t max_det = 100;
  double score_floor = 0.01;
  double mask_threshold = 0.5;
  std::size_t warmup = 10;
  std::string predictor = "stub";
  std::string model_name = "stub";
  std::filesystem::path replay;
  ModelSettings model;
  ReportFormat format = ReportFormat::Markdown;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& v, const std::string& where) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ValidationError(where + ": expected a number, got '" + v + "'");
  return out;
}

inline std::uint64_t parse_count(const std::string& v, const std::string& where) {
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    if (!v.empty() && v[0] != '-') out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) {
    throw ValidationError(where + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

inline double parse_probability(const std::string& v, const std::string& where) {
  const double p = parse_real(v, where);
  if (!(p > 0.0 && p < 1.0)) throw ValidationError(where + ": must lie in (0, 1)");
  return p;
}

}  // namespace detail

inline AppConfig parse_config(std::istream& in, const std::filesystem::path& base_dir,
                              const std::string& name = "config") {
  AppConfig cfg;
  auto path = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_absolute() ? p : base_dir / p;
  };
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, std::map<std::string, Setter>> schema{
      {"dataset",
       {{"root", [&](auto& v, auto&) { cfg.dataset.root = path(v); }},
        {"images", [&](auto& v, auto&) { cfg.dataset.images = v; }},
        {"labels", [&](auto& v, auto&) { cfg.dataset.labels = v; }},
        {"classes", [&](auto& v, auto&) { cfg.dataset.classes = v; }}}},
      {"eval",
       {{"predictions", [&](auto& v, auto&) { cfg.predictions = path(v); }},
        {"iou_threshold", [&](auto& v, auto& w) { cfg.eval.iou_threshold = detail::parse_probability(v, w); }},
        {"conf_threshold", [&](auto& v, auto& w) {
           cfg.eval.conf_threshold = detail::parse_real(v, w);
           if (cfg.eval.conf_threshold < 0.0 || cfg.eval.conf_threshold > 1.0) {
             throw ValidationError(w + ": must lie in [0, 1]");
           }
         }},
        {"iou_kind", [&](auto& v, auto& w) {
           if (v == "mask") cfg.eval.iou_kind = IouKind::Mask;
           else if (v == "box") cfg.eval.iou_kind = IouKind::Box;
           else throw ValidationError(w + ": expected mask or box");
         }},
        {"workers", [&](auto& v, auto& w) {
           cfg.workers = detail::parse_count(v, w);
           if (cfg.workers == 0) throw ValidationError(w + ": must be positive");
         }},
        {"max_det", [&](auto& v, auto& w) { cfg.max_det = detail::parse_count(v, w); }},
        {"score_floor", [&](auto& v, auto& w) { cfg.score_floor = detail::parse_real(v, w); }}}},
      {"postprocess",
       {{"mask_threshold", [&](auto& v, auto& w) { cfg.mask_threshold = detail::parse_probability(v, w); }}}},
      {"bench",
       {{"warmup", [&](auto& v, auto& w) { cfg.warmup = detail::parse_count(v, w); }},
        {"predictor", [&](auto& v, auto& w) {
           if (v != "stub" && v != "replay") throw ValidationError(w + ": expected stub or replay");
           cfg.predictor = v;
         }},
        {"model_name", [&](auto& v, auto&) { cfg.model_name = v; }},
        {"replay", [&](auto& v, auto&) { cfg.replay = path(v); }}}},
      {"model",
       {{"input_height", [&](auto& v, auto& w) { cfg.model.input_height = detail::parse_count(v, w); }},
        {"input_width", [&](auto& v, auto& w) { cfg.model.input_width = detail::parse_count(v, w); }},
        {"embed_dim", [&](auto& v, auto& w) { cfg.model.embed_dim = detail::parse_count(v, w); }},
        {"hidden_dim", [&](auto& v, auto& w) { cfg.model.hidden_dim = detail::parse_count(v, w); }},
        {"queries", [&](auto& v, auto& w) { cfg.model.queries = detail::parse_count(v, w); }},
        {"layers", [&](auto& v, auto& w) { cfg.model.layers = detail::parse_count(v, w); }},
        {"norm_groups", [&](auto& v, auto& w) { cfg.model.norm_groups = detail::parse_count(v, w); }},
        {"seed", [&](auto& v, auto& w) { cfg.model.seed = detail::parse_count(v, w); }},
        {"norm_mean", [&](auto& v, auto& w) { cfg.model.norm_mean = detail::parse_real(v, w); }},
        {"norm_std", [&](auto& v, auto& w) {
           cfg.model.norm_std = detail::parse_real(v, w);
           if (cfg.model.norm_std <= 0.0) throw ValidationError(w + ": must be positive");
         }}}},
      {"report",
       {{"format", [&](auto& v, auto& w) {
           if (v == "markdown") cfg.format = ReportFormat::Markdown;
           else if (v == "csv") cfg.format = ReportFormat::Csv;
           else throw ValidationError(w + ": expected markdown or csv");
         }}}},
  };

  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = name + ":" + std::to_string(line_no);
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ValidationError(where + ": malformed section header");
      section = detail::trim(t.substr(1, t.size() - 2));
      if (!schema.contains(section)) throw ValidationError(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ValidationError(where + ": expected key = value");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    if (section.empty()) throw ValidationError(where + ": key '" + key + "' outside any section");
    const auto& keys = schema.at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) throw ValidationError(where + ": unknown key '" + key + "' in [" + section + "]");
    it->second(value, where + " (" + section + "." + key + ")");
  }
  return cfg;
}

inline AppConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open config: " + file.string());
  return parse_config(in, file.parent_path(), file.string());
}

}  // namespace dfseg
