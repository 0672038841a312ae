#pragma once

// Run-length masks: row-major scan, alternating runs, the first run counts
// zeros (and is the only run allowed to be empty).

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dfseg/error.hpp"
#include "dfseg/mask.hpp"

namespace dfseg {

struct RleMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint64_t> counts;

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

inline RleMask rle_encode(const BinaryMask& mask) {
  RleMask rle{mask.height, mask.width, {}};
  std::uint8_t current = 0;
  std::uint64_t run = 0;
  for (std::uint8_t px : mask.pixels) {
    const std::uint8_t bit = px ? 1 : 0;
    if (bit != current) {
      rle.counts.push_back(run);
      run = 0;
      current = bit;
    }
    ++run;
  }
  rle.counts.push_back(run);
  return rle;
}

inline void validate_rle(const RleMask& rle) {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < rle.counts.size(); ++i) {
    if (i > 0 && rle.counts[i] == 0) {
      throw ValidationError("RLE run " + std::to_string(i) + " is empty");
    }
    total += rle.counts[i];
  }
  if (total != static_cast<std::uint64_t>(rle.height) * rle.width) {
    throw ValidationError("RLE counts sum to " + std::to_string(total) + ", expected " +
                          std::to_string(rle.height * rle.width));
  }
}

inline BinaryMask rle_decode(const RleMask& rle) {
  validate_rle(rle);
  BinaryMask mask(rle.height, rle.width);
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (std::uint64_t run : rle.counts) {
    for (std::uint64_t k = 0; k < run; ++k) mask.pixels[pos++] = value;
    value ^= 1;
  }
  return mask;
}

}  // namespace dfseg
