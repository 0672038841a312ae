#pragma once

// Flat binary tensor bundles for exchanging fixtures with other
// implementations.
//
// Layout (all integers and reals little-endian):
//   8 bytes   magic "DFSEGT01"
//   u32       tensor count
//   per tensor:
//     u32     rank (1..4)
//     u64     extent, repeated rank times
//     f64     values, row-major, product-of-extents of them

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dfseg/error.hpp"
#include "dfseg/mask_head.hpp"
#include "dfseg/tensor.hpp"

namespace dfseg {

inline constexpr std::array<char, 8> kTensorMagic{'D', 'F', 'S', 'E', 'G', 'T', '0', '1'};

namespace detail {

template <typename T>
void put_le(std::ostream& os, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& is, const std::string& path) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
    throw IoError("truncated tensor file: " + path);
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace detail

inline void write_tensors(const std::filesystem::path& path, const std::vector<Tensor>& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os.write(kTensorMagic.data(), kTensorMagic.size());
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(tensors.size()));
  for (const Tensor& t : tensors) {
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.dims()) detail::put_le<std::uint64_t>(os, d);
    for (double v : t.values()) detail::put_le<double>(os, v);
  }
  if (!os) throw IoError("write failed: " + path.string());
}

inline std::vector<Tensor> read_tensors(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kTensorMagic) {
    throw ValidationError("not a tensor bundle (bad magic): " + path.string());
  }
  const auto count = detail::get_le<std::uint32_t>(is, path.string());
  std::vector<Tensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto rank = detail::get_le<std::uint32_t>(is, path.string());
    if (rank == 0 || rank > Tensor::kMaxRank) {
      throw ValidationError("tensor " + std::to_string(i) + " has invalid rank " +
                            std::to_string(rank));
    }
    Tensor::Dims dims(rank);
    std::uint64_t n = 1;
    for (auto& d : dims) {
      d = detail::get_le<std::uint64_t>(is, path.string());
      if (d == 0 || d > (std::uint64_t{1} << 32) || n > (std::uint64_t{1} << 32) / d) {
        throw ValidationError("tensor " + std::to_string(i) + " has an invalid extent");
      }
      n *= d;
    }
    std::vector<double> values(n);
    for (double& v : values) v = detail::get_le<double>(is, path.string());
    out.emplace_back(std::move(dims), std::move(values));
  }
  return out;
}

namespace detail {

inline Tensor as_tensor(const std::vector<double>& v) { return Tensor({v.size()}, v); }

inline void push_conv_norm(std::vector<Tensor>& out, const ConvNorm& cn) {
  out.push_back(cn.weight);
  out.push_back(as_tensor(cn.bias));
  out.push_back(as_tensor(cn.gamma));
  out.push_back(as_tensor(cn.beta));
}

inline std::vector<double> as_vector(const Tensor& t) {
  return {t.values().begin(), t.values().end()};
}

}  // namespace detail

// Parameters in a fixed order: per level (weight, bias, gamma, beta), fuse,
// refine, then per MLP layer (weight, bias).
inline std::vector<Tensor> params_to_tensors(const MaskHeadParams& p) {
  std::vector<Tensor> out;
  for (const auto& proj : p.projections) detail::push_conv_norm(out, proj);
  detail::push_conv_norm(out, p.fuse);
  detail::push_conv_norm(out, p.refine);
  for (const auto& layer : p.mlp) {
    out.push_back(layer.weight);
    out.push_back(detail::as_tensor(layer.bias));
  }
  return out;
}

inline MaskHeadParams params_from_tensors(const std::vector<Tensor>& tensors,
                                          const MaskHeadConfig& cfg) {
  const std::size_t want = 4 * (cfg.strides.size() + 2) + 2 * kMlpDepth;
  if (tensors.size() != want) {
    throw ValidationError("parameter bundle has " + std::to_string(tensors.size()) +
                          " tensors, expected " + std::to_string(want));
  }
  std::size_t i = 0;
  auto conv_norm = [&] {
    ConvNorm cn;
    cn.weight = tensors[i++];
    cn.bias = detail::as_vector(tensors[i++]);
    cn.gamma = detail::as_vector(tensors[i++]);
    cn.beta = detail::as_vector(tensors[i++]);
    return cn;
  };
  MaskHeadParams p;
  for (std::size_t l = 0; l < cfg.strides.size(); ++l) p.projections.push_back(conv_norm());
  p.fuse = conv_norm();
  p.refine = conv_norm();
  for (auto& layer : p.mlp) {
    layer.weight = tensors[i++];
    layer.bias = detail::as_vector(tensors[i++]);
  }
  validate_params(p, cfg);
  return p;
}

}  // namespace dfseg
