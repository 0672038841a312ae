#pragma once

// Dense row-major tensor of doubles (rank <= 4) and the small set of
// deterministic kernels the mask head is built from.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dfseg/error.hpp"

namespace dfseg {

class Tensor {
 public:
  using Dims = std::vector<std::size_t>;

  static constexpr std::size_t kMaxRank = 4;

  // Empty tensor: rank 0, no elements.
  Tensor() = default;

  explicit Tensor(Dims dims, double fill = 0.0) : dims_(std::move(dims)) {
    check_dims(dims_);
    data_.assign(count(dims_), fill);
  }

  Tensor(Dims dims, std::vector<double> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims(dims_);
    if (data_.size() != count(dims_)) {
      throw ShapeError("tensor " + shape_string(dims_) + " needs " +
                       std::to_string(count(dims_)) + " values, got " +
                       std::to_string(data_.size()));
    }
  }

  std::size_t rank() const { return dims_.size(); }
  const Dims& dims() const { return dims_; }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  template <typename... Idx>
  double& operator()(Idx... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... Idx>
  double operator()(Idx... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  // Copy of the sub-tensor at leading index `i` (rank drops by one).
  Tensor slice(std::size_t i) const {
    if (rank() < 2 || i >= dims_[0]) {
      throw ShapeError("cannot slice index " + std::to_string(i) + " of " +
                       shape_string());
    }
    Dims sub(dims_.begin() + 1, dims_.end());
    const std::size_t n = count(sub);
    std::vector<double> out(data_.begin() + static_cast<std::ptrdiff_t>(i * n),
                            data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
    return Tensor(std::move(sub), std::move(out));
  }

  // Writes `src` into leading index `i`.
  void set_slice(std::size_t i, const Tensor& src) {
    Dims sub(dims_.begin() + 1, dims_.end());
    if (rank() < 2 || i >= dims_[0] || src.dims() != sub) {
      throw ShapeError("cannot place " + src.shape_string() + " into slice " +
                       std::to_string(i) + " of " + shape_string());
    }
    std::copy(src.data_.begin(), src.data_.end(),
              data_.begin() + static_cast<std::ptrdiff_t>(i * src.size()));
  }

  Tensor reshaped(Dims dims) const {
    return Tensor(std::move(dims), data_);
  }

  std::string shape_string() const { return shape_string(dims_); }

  static std::string shape_string(const Dims& dims) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < dims.size(); ++i) {
      if (i) os << 'x';
      os << dims[i];
    }
    os << ']';
    return os.str();
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  static std::size_t count(const Dims& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                           std::multiplies<>());
  }

  static void check_dims(const Dims& dims) {
    if (dims.empty() || dims.size() > kMaxRank) {
      throw ShapeError("tensor rank must be 1..4, got " +
                       std::to_string(dims.size()));
    }
    for (std::size_t d : dims) {
      if (d == 0) throw ShapeError("tensor extents must be positive: " + shape_string(dims));
    }
  }

  std::size_t offset(std::initializer_list<std::size_t> idx) const {
    std::size_t off = 0;
    std::size_t axis = 0;
    for (std::size_t i : idx) off = off * dims_[axis++] + i;
    return off;
  }

  Dims dims_;
  std::vector<double> data_;
};

namespace detail {

inline void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) +
                     ", got " + t.shape_string());
  }
}

}  // namespace detail

// Same-size 2-D convolution, stride 1, zero padding (k-1)/2.
// input C x H x W, weight O x C x k x k (k in {1, 3}), bias O.
inline Tensor conv2d(const Tensor& input, const Tensor& weight,
                     std::span<const double> bias) {
  detail::require_rank(input, 3, "conv2d input");
  detail::require_rank(weight, 4, "conv2d weight");
  const std::size_t in_c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t out_c = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != in_c || weight.dim(3) != k || (k != 1 && k != 3) ||
      bias.size() != out_c) {
    throw ShapeError("conv2d: input " + input.shape_string() + " incompatible with weight " +
                     weight.shape_string() + " and bias of " + std::to_string(bias.size()));
  }
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto hs = static_cast<std::ptrdiff_t>(h), ws = static_cast<std::ptrdiff_t>(w);
  Tensor out({out_c, h, w});
  const double* src = input.data();
  const double* ker = weight.data();
  double* dst = out.data();
  for (std::size_t o = 0; o < out_c; ++o) {
    double* plane = dst + o * h * w;
    std::fill(plane, plane + h * w, bias[o]);
    for (std::size_t c = 0; c < in_c; ++c) {
      const double* in_plane = src + c * h * w;
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          const double kv = ker[((o * in_c + c) * k + ky) * k + kx];
          const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
          const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
          const std::ptrdiff_t y_lo = std::max<std::ptrdiff_t>(0, -dy);
          const std::ptrdiff_t y_hi = std::min(hs, hs - dy);
          const std::ptrdiff_t x_lo = std::max<std::ptrdiff_t>(0, -dx);
          const std::ptrdiff_t x_hi = std::min(ws, ws - dx);
          for (std::ptrdiff_t y = y_lo; y < y_hi; ++y) {
            double* row = plane + y * ws;
            const double* in_row = in_plane + (y + dy) * ws + dx;
            for (std::ptrdiff_t x = x_lo; x < x_hi; ++x) row[x] += kv * in_row[x];
          }
        }
      }
    }
  }
  return out;
}

inline Tensor conv2d(const Tensor& input, const Tensor& weight,
                     const std::vector<double>& bias) {
  return conv2d(input, weight, std::span<const double>(bias));
}

// Group normalization with biased variance. Each group spans C/groups
// channels and all spatial positions.
inline Tensor group_norm(const Tensor& input, std::size_t groups,
                         std::span<const double> gamma, std::span<const double> beta,
                         double eps = 1e-5) {
  detail::require_rank(input, 3, "group_norm input");
  const std::size_t c = input.dim(0);
  if (groups == 0 || c % groups != 0) {
    throw ShapeError("group_norm: " + std::to_string(groups) + " groups do not divide " +
                     std::to_string(c) + " channels");
  }
  if (gamma.size() != c || beta.size() != c) {
    throw ShapeError("group_norm: affine params must have " + std::to_string(c) + " entries");
  }
  const std::size_t plane = input.dim(1) * input.dim(2);
  const std::size_t per_group = c / groups;
  const std::size_t n = per_group * plane;
  Tensor out(input.dims());
  for (std::size_t g = 0; g < groups; ++g) {
    const double* x = input.data() + g * n;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (x[i] - mean) * (x[i] - mean);
    var /= static_cast<double>(n);
    const double denom = std::sqrt(var + eps);
    for (std::size_t ch = g * per_group; ch < (g + 1) * per_group; ++ch) {
      const double* xs = input.data() + ch * plane;
      double* ys = out.data() + ch * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double centered = xs[i] - mean;
        // Zero variance with eps == 0 yields 0/0; the centered value is 0 there.
        const double normed = denom > 0.0 ? centered / denom : 0.0;
        ys[i] = gamma[ch] * normed + beta[ch];
      }
    }
  }
  return out;
}

inline Tensor group_norm(const Tensor& input, std::size_t groups,
                         const std::vector<double>& gamma, const std::vector<double>& beta,
                         double eps = 1e-5) {
  return group_norm(input, groups, std::span<const double>(gamma),
                    std::span<const double>(beta), eps);
}

namespace detail {

struct Tap {
  std::size_t lo, hi;
  double frac;
};

// Half-pixel-center sampling positions for one axis.
inline std::vector<Tap> resize_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const double max_src = static_cast<double>(in - 1);
  for (std::size_t d = 0; d < out; ++d) {
    double s = (static_cast<double>(d) + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, max_src);
    const auto lo = static_cast<std::size_t>(std::floor(s));
    const std::size_t hi = std::min(lo + 1, in - 1);
    taps[d] = {lo, hi, s - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace detail

// Bilinear resize with half-pixel centers (no corner alignment). Accepts
// C x H x W or a single H x W plane.
inline Tensor bilinear_resize(const Tensor& input, std::size_t out_h, std::size_t out_w) {
  if (input.rank() != 2 && input.rank() != 3) {
    throw ShapeError("bilinear_resize: expected rank 2 or 3, got " + input.shape_string());
  }
  if (out_h == 0 || out_w == 0) throw ShapeError("bilinear_resize: output extents must be positive");
  const bool planar = input.rank() == 2;
  const std::size_t c = planar ? 1 : input.dim(0);
  const std::size_t in_h = input.dim(planar ? 0 : 1);
  const std::size_t in_w = input.dim(planar ? 1 : 2);
  if (in_h == out_h && in_w == out_w) return input;

  const auto ty = detail::resize_taps(in_h, out_h);
  const auto tx = detail::resize_taps(in_w, out_w);
  Tensor out(planar ? Tensor::Dims{out_h, out_w} : Tensor::Dims{c, out_h, out_w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* src = input.data() + ch * in_h * in_w;
    double* dst = out.data() + ch * out_h * out_w;
    for (std::size_t y = 0; y < out_h; ++y) {
      const double* r0 = src + ty[y].lo * in_w;
      const double* r1 = src + ty[y].hi * in_w;
      for (std::size_t x = 0; x < out_w; ++x) {
        const auto& t = tx[x];
        const double top = std::lerp(r0[t.lo], r0[t.hi], t.frac);
        const double bottom = std::lerp(r1[t.lo], r1[t.hi], t.frac);
        dst[y * out_w + x] = std::lerp(top, bottom, ty[y].frac);
      }
    }
  }
  return out;
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Tensor sigmoid(Tensor t) {
  for (double& v : t.values()) v = sigmoid(v);
  return t;
}

inline Tensor relu(Tensor t) {
  for (double& v : t.values()) v = v > 0.0 ? v : 0.0;
  return t;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  if (a.dims() != b.dims()) {
    throw ShapeError("add: shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

// (M x K) * (K x N).
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require_rank(a, 2, "matmul lhs");
  detail::require_rank(b, 2, "matmul rhs");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ShapeError("matmul: inner extents differ " + a.shape_string() + " vs " +
                     b.shape_string());
  }
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return out;
}

}  // namespace dfseg
