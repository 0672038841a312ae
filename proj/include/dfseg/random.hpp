#pragma once

#include <cstdint>
#include <random>

#include "dfseg/tensor.hpp"

namespace dfseg {

// Seeded uniform source. The mapping from engine output to double is done
// by hand so streams are identical across standard library vendors.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next(); }

  std::uint64_t bits() { return engine_(); }

  Tensor tensor(Tensor::Dims dims, double lo, double hi) {
    Tensor t(std::move(dims));
    for (double& v : t.values()) v = uniform(lo, hi);
    return t;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dfseg
