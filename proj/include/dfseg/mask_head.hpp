#pragma once

// Mask head forward pass: PAN levels (strides 8/16/32) are projected to a
// common width, fused on the stride-8 grid, smoothed, upsampled to 1/4 of the
// input size and dotted with per-query mask embeddings.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "dfseg/error.hpp"
#include "dfseg/random.hpp"
#include "dfseg/tensor.hpp"

namespace dfseg {

inline constexpr std::size_t kMlpDepth = 3;
inline constexpr std::size_t kMaskStride = 4;

struct MaskHeadConfig {
  std::size_t embed_dim = 256;
  std::vector<std::size_t> strides{8, 16, 32};
  std::vector<std::size_t> level_channels{256, 256, 256};
  std::size_t hidden_dim = 256;
  std::size_t norm_groups = 32;
  double norm_eps = 1e-5;

  // Group count actually used: norm_groups, or gcd(norm_groups, embed_dim)
  // when norm_groups does not divide embed_dim.
  std::size_t effective_groups() const {
    if (norm_groups != 0 && embed_dim % norm_groups == 0) return norm_groups;
    return std::gcd(norm_groups, embed_dim);
  }

  void validate() const {
    if (embed_dim == 0 || hidden_dim == 0) throw ValidationError("mask head widths must be positive");
    if (strides.empty()) throw ValidationError("mask head needs at least one stride");
    if (level_channels.size() != strides.size()) {
      throw ValidationError("level_channels has " + std::to_string(level_channels.size()) +
                            " entries for " + std::to_string(strides.size()) + " strides");
    }
    for (std::size_t i = 0; i < strides.size(); ++i) {
      if (level_channels[i] == 0) throw ValidationError("level channel counts must be positive");
      if (i > 0 && strides[i] <= strides[i - 1]) {
        throw ValidationError("strides must be strictly increasing");
      }
      if (strides[i] % strides[0] != 0) {
        throw ValidationError("finest stride must divide every other stride");
      }
    }
    if (strides[0] < kMaskStride || strides[0] % kMaskStride != 0) {
      throw ValidationError("finest stride must be a multiple of 4");
    }
  }
};

struct FeaturePyramid {
  std::vector<Tensor> levels;
  std::size_t height = 0;
  std::size_t width = 0;
};

// Decoder hidden states, layers x queries x hidden. The first
// `denoising_count` queries of each layer are denoising queries.
struct QuerySet {
  Tensor hidden;
  std::size_t denoising_count = 0;

  std::size_t layers() const { return hidden.dim(0); }
  std::size_t queries() const { return hidden.dim(1); }
};

// Convolution followed by GroupNorm.
struct ConvNorm {
  Tensor weight;
  std::vector<double> bias;
  std::vector<double> gamma;
  std::vector<double> beta;
};

// y = x * weight + bias, weight stored in x out.
struct Linear {
  Tensor weight;
  std::vector<double> bias;
};

struct MaskHeadParams {
  std::vector<ConvNorm> projections;  // one 1x1 projection per level
  ConvNorm fuse;                      // 3x3 smoothing on the stride-8 grid
  ConvNorm refine;                    // 3x3 after the upsample to 1/4 scale
  std::array<Linear, kMlpDepth> mlp;  // hidden -> C -> C -> C
};

struct MaskOutput {
  Tensor pixel_features;  // C x H/4 x W/4
  Tensor logits;          // L x Q x H/4 x W/4
};

// Counters filled by forward() when requested.
struct ForwardTrace {
  std::size_t pixel_feature_passes = 0;
  std::size_t embedded_layers = 0;
};

inline double default_logit_scale(std::size_t embed_dim) {
  return 1.0 / std::sqrt(static_cast<double>(embed_dim));
}

namespace detail {

inline ConvNorm random_conv_norm(UniformSource& rng, std::size_t out_c, std::size_t in_c,
                                 std::size_t k) {
  ConvNorm cn;
  cn.weight = rng.tensor({out_c, in_c, k, k}, -0.1, 0.1);
  cn.bias.resize(out_c);
  for (double& b : cn.bias) b = rng.uniform(-0.1, 0.1);
  cn.gamma.assign(out_c, 1.0);
  cn.beta.assign(out_c, 0.0);
  return cn;
}

inline void check_conv_norm(const ConvNorm& cn, std::size_t out_c, std::size_t in_c,
                            std::size_t k, const std::string& name) {
  const Tensor::Dims want{out_c, in_c, k, k};
  if (cn.weight.dims() != want || cn.bias.size() != out_c || cn.gamma.size() != out_c ||
      cn.beta.size() != out_c) {
    throw ShapeError(name + ": weight " + cn.weight.shape_string() + " does not match " +
                     Tensor::shape_string(want));
  }
}

inline Tensor apply_conv_norm(const Tensor& x, const ConvNorm& cn, const MaskHeadConfig& cfg) {
  return group_norm(conv2d(x, cn.weight, cn.bias), cfg.effective_groups(), cn.gamma, cn.beta,
                    cfg.norm_eps);
}

inline Tensor apply_linear(const Tensor& x, const Linear& layer) {
  Tensor y = matmul(x, layer.weight);
  const std::size_t n = layer.weight.dim(1);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += layer.bias[i % n];
  return y;
}

}  // namespace detail

// Seeded parameters: weights and biases uniform in [-0.1, 0.1], norm
// gamma = 1 and beta = 0.
inline MaskHeadParams random_params(const MaskHeadConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  UniformSource rng(seed);
  const std::size_t c = cfg.embed_dim;
  MaskHeadParams p;
  for (std::size_t ch : cfg.level_channels) {
    p.projections.push_back(detail::random_conv_norm(rng, c, ch, 1));
  }
  p.fuse = detail::random_conv_norm(rng, c, c, 3);
  p.refine = detail::random_conv_norm(rng, c, c, 3);
  std::size_t in = cfg.hidden_dim;
  for (auto& layer : p.mlp) {
    layer.weight = rng.tensor({in, c}, -0.1, 0.1);
    layer.bias.resize(c);
    for (double& b : layer.bias) b = rng.uniform(-0.1, 0.1);
    in = c;
  }
  return p;
}

inline void validate_params(const MaskHeadParams& p, const MaskHeadConfig& cfg) {
  cfg.validate();
  const std::size_t c = cfg.embed_dim;
  if (p.projections.size() != cfg.strides.size()) {
    throw ShapeError("expected " + std::to_string(cfg.strides.size()) + " level projections, got " +
                     std::to_string(p.projections.size()));
  }
  for (std::size_t i = 0; i < p.projections.size(); ++i) {
    detail::check_conv_norm(p.projections[i], c, cfg.level_channels[i], 1,
                            "projection " + std::to_string(i));
  }
  detail::check_conv_norm(p.fuse, c, c, 3, "fuse");
  detail::check_conv_norm(p.refine, c, c, 3, "refine");
  std::size_t in = cfg.hidden_dim;
  for (std::size_t i = 0; i < kMlpDepth; ++i) {
    const Linear& l = p.mlp[i];
    if (l.weight.dims() != Tensor::Dims{in, c} || l.bias.size() != c) {
      throw ShapeError("mlp layer " + std::to_string(i) + ": weight " + l.weight.shape_string() +
                       " does not match " + Tensor::shape_string({in, c}));
    }
    in = c;
  }
}

inline void validate_pyramid(const FeaturePyramid& pyr, const MaskHeadConfig& cfg) {
  if (pyr.levels.size() != cfg.strides.size()) {
    throw ShapeError("pyramid has " + std::to_string(pyr.levels.size()) + " levels, config has " +
                     std::to_string(cfg.strides.size()) + " strides");
  }
  if (pyr.height == 0 || pyr.width == 0 || pyr.height % kMaskStride || pyr.width % kMaskStride) {
    throw ShapeError("input size " + std::to_string(pyr.height) + "x" + std::to_string(pyr.width) +
                     " is not divisible by 4");
  }
  for (std::size_t i = 0; i < cfg.strides.size(); ++i) {
    const std::size_t s = cfg.strides[i];
    if (pyr.height % s || pyr.width % s) {
      throw ShapeError("stride " + std::to_string(s) + " does not divide input size " +
                       std::to_string(pyr.height) + "x" + std::to_string(pyr.width));
    }
    const Tensor::Dims want{cfg.level_channels[i], pyr.height / s, pyr.width / s};
    if (pyr.levels[i].dims() != want) {
      throw ShapeError("level " + std::to_string(i) + " is " + pyr.levels[i].shape_string() +
                       ", expected " + Tensor::shape_string(want));
    }
  }
}

// C x H/4 x W/4 pixel features shared by every query.
inline Tensor build_pixel_features(const FeaturePyramid& pyr, const MaskHeadParams& p,
                                   const MaskHeadConfig& cfg) {
  validate_pyramid(pyr, cfg);
  validate_params(p, cfg);
  const std::size_t fine_h = pyr.height / cfg.strides[0];
  const std::size_t fine_w = pyr.width / cfg.strides[0];

  Tensor fused;
  for (std::size_t i = 0; i < pyr.levels.size(); ++i) {
    Tensor level = detail::apply_conv_norm(pyr.levels[i], p.projections[i], cfg);
    level = bilinear_resize(level, fine_h, fine_w);
    fused = fused.empty() ? std::move(level) : add(fused, level);
  }
  Tensor x = relu(detail::apply_conv_norm(fused, p.fuse, cfg));
  x = bilinear_resize(x, pyr.height / kMaskStride, pyr.width / kMaskStride);
  return relu(detail::apply_conv_norm(x, p.refine, cfg));
}

// Shared 3-layer MLP over every layer and query: L x Q x D -> L x Q x C.
inline Tensor embed_queries(const QuerySet& queries, const MaskHeadParams& p) {
  detail::require_rank(queries.hidden, 3, "query hidden states");
  const std::size_t layers = queries.hidden.dim(0), q = queries.hidden.dim(1);
  const std::size_t d = queries.hidden.dim(2);
  if (p.mlp[0].weight.rank() != 2 || p.mlp[0].weight.dim(0) != d) {
    throw ShapeError("query width " + std::to_string(d) + " does not match mlp input " +
                     p.mlp[0].weight.shape_string());
  }
  if (queries.denoising_count > q) {
    throw ValidationError("denoising_count exceeds query count");
  }
  const std::size_t c = p.mlp[kMlpDepth - 1].weight.dim(1);
  Tensor out({layers, q, c});
  for (std::size_t l = 0; l < layers; ++l) {
    Tensor x = queries.hidden.slice(l);
    for (std::size_t i = 0; i < kMlpDepth; ++i) {
      x = detail::apply_linear(x, p.mlp[i]);
      if (i + 1 < kMlpDepth) x = relu(std::move(x));
    }
    out.set_slice(l, x);
  }
  return out;
}

// logits[q, y, x] = scale * sum_c emb[q, c] * feat[c, y, x].
inline Tensor mask_logits(const Tensor& embeddings, const Tensor& pixel_features, double scale) {
  detail::require_rank(embeddings, 2, "mask embeddings");
  detail::require_rank(pixel_features, 3, "pixel features");
  const std::size_t c = pixel_features.dim(0), h = pixel_features.dim(1),
                    w = pixel_features.dim(2);
  if (embeddings.dim(1) != c) {
    throw ShapeError("mask_logits: embeddings " + embeddings.shape_string() +
                     " vs pixel features " + pixel_features.shape_string());
  }
  Tensor flat = matmul(embeddings, pixel_features.reshaped({c, h * w}));
  for (double& v : flat.values()) v *= scale;
  return flat.reshaped({embeddings.dim(0), h, w});
}

// Full forward: pixel features once, then logits for every decoder layer
// (auxiliary layers and denoising queries included).
inline MaskOutput forward(const FeaturePyramid& pyr, const QuerySet& queries,
                          const MaskHeadParams& p, const MaskHeadConfig& cfg,
                          ForwardTrace* trace = nullptr) {
  MaskOutput out;
  out.pixel_features = build_pixel_features(pyr, p, cfg);
  if (trace) ++trace->pixel_feature_passes;
  const Tensor emb = embed_queries(queries, p);
  const std::size_t layers = emb.dim(0), q = emb.dim(1);
  const std::size_t h = out.pixel_features.dim(1), w = out.pixel_features.dim(2);
  const double scale = default_logit_scale(cfg.embed_dim);
  out.logits = Tensor({layers, q, h, w});
  for (std::size_t l = 0; l < layers; ++l) {
    out.logits.set_slice(l, mask_logits(emb.slice(l), out.pixel_features, scale));
    if (trace) ++trace->embedded_layers;
  }
  return out;
}

}  // namespace dfseg
