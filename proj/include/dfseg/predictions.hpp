#pragma once

// Prediction JSON:
//   { "<image_id>": [ { "class_id": int, "score": float,
//                       "box": [x0, y0, x1, y1],            // pixels
//                       "mask": { "h": int, "w": int, "counts": [int, ...] } }, ... ] }
// "mask" is optional (box-only predictions). Counts follow RleMask.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dfseg/box.hpp"
#include "dfseg/error.hpp"
#include "dfseg/mask.hpp"
#include "dfseg/rle.hpp"

namespace dfseg {

struct PredictionRecord {
  int class_id = 0;
  double score = 0.0;
  CornerBox box;
  std::optional<RleMask> mask;

  // Decodes on demand; an absent mask decodes to an empty BinaryMask.
  BinaryMask decoded_mask() const { return mask ? rle_decode(*mask) : BinaryMask{}; }

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

using PredictionSet = std::map<std::string, std::vector<PredictionRecord>>;

namespace detail {

[[noreturn]] inline void schema_error(const std::string& where, const std::string& what) {
  throw ValidationError("prediction JSON " + where + ": " + what);
}

inline std::int64_t json_int(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number_integer()) schema_error(where, "expected an integer");
  return j.get<std::int64_t>();
}

inline double json_real(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number()) schema_error(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) schema_error(where, "expected a finite number");
  return v;
}

inline const nlohmann::json& json_field(const nlohmann::json& obj, const char* key,
                                        const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, std::string("missing \"") + key + "\"");
  return *it;
}

}  // namespace detail

inline PredictionSet parse_predictions(const nlohmann::json& root) {
  if (!root.is_object()) detail::schema_error("$", "expected an object keyed by image id");
  PredictionSet out;
  for (const auto& [image_id, list] : root.items()) {
    const std::string base = "$[\"" + image_id + "\"]";
    if (!list.is_array()) detail::schema_error(base, "expected an array");
    auto& records = out[image_id];
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = base + "[" + std::to_string(i) + "]";
      const auto& item = list[i];
      if (!item.is_object()) detail::schema_error(where, "expected an object");
      for (const auto& [key, _] : item.items()) {
        if (key != "class_id" && key != "score" && key != "box" && key != "mask") {
          detail::schema_error(where, "unknown key \"" + key + "\"");
        }
      }
      PredictionRecord r;
      const auto cls = detail::json_int(detail::json_field(item, "class_id", where), where + ".class_id");
      if (cls < 0) detail::schema_error(where + ".class_id", "must be non-negative");
      r.class_id = static_cast<int>(cls);
      r.score = detail::json_real(detail::json_field(item, "score", where), where + ".score");
      if (r.score < 0.0 || r.score > 1.0) detail::schema_error(where + ".score", "must lie in [0, 1]");
      const auto& box = detail::json_field(item, "box", where);
      if (!box.is_array() || box.size() != 4) detail::schema_error(where + ".box", "expected 4 numbers");
      r.box = {detail::json_real(box[0], where + ".box[0]"), detail::json_real(box[1], where + ".box[1]"),
               detail::json_real(box[2], where + ".box[2]"), detail::json_real(box[3], where + ".box[3]")};
      if (const auto m = item.find("mask"); m != item.end()) {
        const std::string mw = where + ".mask";
        if (!m->is_object()) detail::schema_error(mw, "expected an object");
        RleMask rle;
        const auto h = detail::json_int(detail::json_field(*m, "h", mw), mw + ".h");
        const auto w = detail::json_int(detail::json_field(*m, "w", mw), mw + ".w");
        if (h < 0 || w < 0) detail::schema_error(mw, "negative mask size");
        rle.height = static_cast<std::size_t>(h);
        rle.width = static_cast<std::size_t>(w);
        const auto& counts = detail::json_field(*m, "counts", mw);
        if (!counts.is_array()) detail::schema_error(mw + ".counts", "expected an array");
        for (std::size_t k = 0; k < counts.size(); ++k) {
          const auto c = detail::json_int(counts[k], mw + ".counts[" + std::to_string(k) + "]");
          if (c < 0) detail::schema_error(mw + ".counts[" + std::to_string(k) + "]", "negative run");
          rle.counts.push_back(static_cast<std::uint64_t>(c));
        }
        try {
          validate_rle(rle);
        } catch (const ValidationError& e) {
          detail::schema_error(mw + ".counts", e.what());
        }
        r.mask = std::move(rle);
      }
      records.push_back(std::move(r));
    }
  }
  return out;
}

inline PredictionSet load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open predictions: " + path.string());
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("prediction JSON " + path.string() + ": " + e.what());
  }
  return parse_predictions(root);
}

inline nlohmann::json predictions_to_json(const PredictionSet& set) {
  nlohmann::json root = nlohmann::json::object();
  for (const auto& [id, records] : set) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& r : records) {
      nlohmann::json item{{"class_id", r.class_id},
                          {"score", r.score},
                          {"box", {r.box.x0, r.box.y0, r.box.x1, r.box.y1}}};
      if (r.mask) {
        item["mask"] = {{"h", r.mask->height}, {"w", r.mask->width}, {"counts", r.mask->counts}};
      }
      list.push_back(std::move(item));
    }
    root[id] = std::move(list);
  }
  return root;
}

// Canonical text form: sorted keys, two-space indent, trailing newline.
inline std::string dump_predictions(const PredictionSet& set) {
  return predictions_to_json(set).dump(2) + "\n";
}

inline void save_predictions(const std::filesystem::path& path, const PredictionSet& set) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write predictions: " + path.string());
  out << dump_predictions(set);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace dfseg
