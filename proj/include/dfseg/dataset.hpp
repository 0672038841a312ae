#pragma once

// Dataset layout (YOLO style):
//   <root>/<images>/<id>.ppm|.pgm   binary netpbm, maxval <= 255
//   <root>/<labels>/<id>.txt        polygon labels (see labels.hpp)
//   <root>/<classes>                one class name per line

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "dfseg/error.hpp"
#include "dfseg/labels.hpp"
#include "dfseg/metrics.hpp"
#include "dfseg/tensor.hpp"

namespace dfseg {

struct ImageEntry {
  std::string id;
  std::size_t width = 0;
  std::size_t height = 0;
  std::filesystem::path image_path;
  std::filesystem::path label_path;
};

struct DatasetIndex {
  std::vector<ImageEntry> images;
  std::vector<std::string> class_names;
};

struct NetpbmImage {
  std::size_t width = 0, height = 0, channels = 0;
  std::vector<std::uint8_t> pixels;  // interleaved

  // channels x height x width, values 0..255.
  Tensor to_tensor() const {
    Tensor t({channels, height, width});
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        for (std::size_t c = 0; c < channels; ++c) {
          t(c, y, x) = pixels[(y * width + x) * channels + c];
        }
      }
    }
    return t;
  }
};

namespace detail {

inline std::size_t netpbm_field(std::istream& in, const std::string& path) {
  char ch = 0;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      in.unget();
      break;
    }
  }
  std::size_t v = 0;
  if (!(in >> v)) throw ValidationError("malformed netpbm header: " + path);
  return v;
}

struct NetpbmHeader {
  std::size_t width, height, channels, maxval;
};

inline NetpbmHeader read_netpbm_header(std::istream& in, const std::string& path) {
  char magic[2] = {};
  if (!in.read(magic, 2) || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw ValidationError("not a binary PGM/PPM image: " + path);
  }
  NetpbmHeader h{};
  h.channels = magic[1] == '6' ? 3 : 1;
  h.width = netpbm_field(in, path);
  h.height = netpbm_field(in, path);
  h.maxval = netpbm_field(in, path);
  if (h.width == 0 || h.height == 0 || h.maxval == 0 || h.maxval > 255) {
    throw ValidationError("unsupported netpbm geometry or depth: " + path);
  }
  in.get();  // single whitespace before the raster
  return h;
}

}  // namespace detail

inline NetpbmImage read_netpbm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image: " + path.string());
  const auto h = detail::read_netpbm_header(in, path.string());
  NetpbmImage img{h.width, h.height, h.channels, {}};
  img.pixels.resize(h.width * h.height * h.channels);
  if (!in.read(reinterpret_cast<char*>(img.pixels.data()),
               static_cast<std::streamsize>(img.pixels.size()))) {
    throw IoError("truncated image: " + path.string());
  }
  return img;
}

inline void write_netpbm(const std::filesystem::path& path, const NetpbmImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image: " + path.string());
  out << (img.channels == 3 ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

inline DatasetIndex load_dataset(const std::filesystem::path& root, const std::string& images = "images",
                                 const std::string& labels = "labels",
                                 const std::string& classes = "classes.txt") {
  DatasetIndex index;
  const auto classes_path = root / classes;
  std::ifstream cls(classes_path);
  if (!cls) throw IoError("cannot open class list: " + classes_path.string());
  for (std::string line; std::getline(cls, line);) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    index.class_names.push_back(line.substr(b, e - b + 1));
  }
  const auto image_dir = root / images;
  if (!std::filesystem::is_directory(image_dir)) {
    throw IoError("image directory not found: " + image_dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(image_dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".ppm" || ext == ".pgm")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::set<std::string> seen;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw IoError("cannot open image: " + f.string());
    const auto h = detail::read_netpbm_header(in, f.string());
    ImageEntry entry{f.stem().string(), h.width, h.height, f,
                     root / labels / (f.stem().string() + ".txt")};
    if (!seen.insert(entry.id).second) throw ValidationError("duplicate image id: " + entry.id);
    index.images.push_back(std::move(entry));
  }
  return index;
}

// Ground truth for one image as evaluator detections (pixel boxes).
inline std::vector<Detection> ground_truth_detections(const ImageEntry& entry,
                                                      std::size_t class_count) {
  const auto targets =
      load_yolo_seg_labels(entry.label_path, entry.width, entry.height, class_count);
  std::vector<Detection> out;
  out.reserve(targets.size());
  const double w = static_cast<double>(entry.width), h = static_cast<double>(entry.height);
  for (const auto& t : targets) {
    const CornerBox c = to_corners(t.box);
    out.push_back({t.class_id, 1.0, {c.x0 * w, c.y0 * h, c.x1 * w, c.y1 * h}, t.mask});
  }
  return out;
}

}  // namespace dfseg
