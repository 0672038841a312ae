#include <gtest/gtest.h>

#include "dfseg/postprocess.hpp"
#include "dfseg/random.hpp"
#include "oracles.hpp"

using namespace dfseg;

namespace {

RawDetections random_raw(UniformSource& rng, std::size_t q, std::size_t h, std::size_t w) {
  RawDetections raw;
  for (std::size_t i = 0; i < q; ++i) {
    raw.scores.push_back(rng.next());
    raw.class_ids.push_back(static_cast<int>(rng.next() * 4));
    raw.boxes.push_back({rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 0.8), rng.uniform(0, 0.8)});
  }
  if (q) raw.mask_logits = rng.tensor({q, h, w}, -4, 4);
  return raw;
}

bool outside(const CornerBox& b, std::size_t y, std::size_t x) {
  const double cx = x + 0.5, cy = y + 0.5;
  return !(cx >= b.x0 && cx < b.x1 && cy >= b.y0 && cy < b.y1);
}

}  // namespace

TEST(FilterConfidence, KeepsAtOrAboveThreshold) {
  RawDetections raw;
  raw.scores = {0.9, 0.3};
  raw.class_ids = {1, 2};
  raw.boxes = {{0.5, 0.5, 0.2, 0.2}, {0.1, 0.1, 0.1, 0.1}};
  raw.mask_logits = Tensor({2, 2, 2});
  raw.mask_logits(1, 0, 0) = 7.0;
  const auto kept = filter_confidence(raw, 0.5);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept.class_ids[0], 1);
  EXPECT_EQ(kept.mask_logits.dims(), (Tensor::Dims{1, 2, 2}));
  EXPECT_EQ(filter_confidence(raw, 0.0).size(), 2u);
  EXPECT_EQ(filter_confidence(raw, 0.9).size(), 1u);
  raw.scores[1] = 1.5;
  EXPECT_THROW(filter_confidence(raw, 0.5), ValidationError);
}

TEST(UpscaleMask, ClosedForms) {
  EXPECT_TRUE(oracle::all_equal(upscale_mask(Tensor({3, 4}), {17, 9}), 0.5));
  UniformSource rng(1);
  const Tensor z = rng.tensor({3, 4}, -3, 3);
  EXPECT_EQ(upscale_mask(z, {3, 4}), sigmoid(z));
}

TEST(UpscaleMask, CheckerboardByHand) {
  Tensor z({2, 2}, std::vector<double>{50, -50, -50, 50});
  const Tensor up = upscale_mask(z, {4, 4});
  const double hi = sigmoid(50.0), lo = sigmoid(-50.0);
  // Source coordinates per output index: -0.25 (clamped 0), 0.25, 0.75, 1.25 (clamped 1).
  const double w[4] = {0.0, 0.25, 0.75, 1.0};
  for (std::size_t y = 0; y < 4; ++y) {
    for (std::size_t x = 0; x < 4; ++x) {
      const double top = (1 - w[x]) * hi + w[x] * lo;
      const double bottom = (1 - w[x]) * lo + w[x] * hi;
      EXPECT_NEAR(up(y, x), (1 - w[y]) * top + w[y] * bottom, 1e-15);
    }
  }
}

TEST(Binarize, GreaterOrEqual) {
  const BinaryMask m = binarize(Tensor({2, 3}, 0.5), 0.5);
  EXPECT_EQ(m.count(), 6u);
  UniformSource rng(2);
  const Tensor p = rng.tensor({7, 5}, 0, 1);
  const BinaryMask b = binarize(p, 0.37);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(b.pixels[i], p[i] >= 0.37 ? 1 : 0);
}

TEST(CropToBox, RegionArithmetic) {
  const BinaryMask ones(4, 6, 1);
  EXPECT_EQ(crop_to_box(ones, {0, 0, 6, 4}), ones);
  EXPECT_EQ(crop_to_box(ones, {3, 3, 3, 3}).count(), 0u);
  const BinaryMask left = crop_to_box(ones, {0, 0, 3, 4});
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 6; ++x) EXPECT_EQ(left.at(y, x), x < 3 ? 1 : 0);
}

TEST(CropToBox, CommutesWithBinarize) {
  UniformSource rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor p = rng.tensor({9, 11}, 0, 1);
    const CornerBox b{rng.uniform(-2, 11), rng.uniform(-2, 9), rng.uniform(0, 13), rng.uniform(0, 11)};
    EXPECT_EQ(crop_to_box(binarize(p, 0.5), b), binarize(crop_to_box(p, b), 0.5));
  }
}

TEST(ScaleBoxes, Arithmetic) {
  const auto full = scale_boxes({{0.5, 0.5, 1, 1}}, {64, 64}, {100, 200});
  EXPECT_EQ(full[0].x0, 0.0);
  EXPECT_EQ(full[0].y0, 0.0);
  EXPECT_EQ(full[0].x1, 200.0);
  EXPECT_EQ(full[0].y1, 100.0);
  const auto q = scale_boxes({{0.25, 0.25, 0.5, 0.5}}, {64, 64}, {100, 200});
  EXPECT_EQ(q[0].x0, 0.0);
  EXPECT_EQ(q[0].y0, 0.0);
  EXPECT_EQ(q[0].x1, 100.0);
  EXPECT_EQ(q[0].y1, 50.0);
  const auto clamped = scale_boxes({{0.9, 0.1, 0.6, 0.6}}, {64, 64}, {10, 10});
  EXPECT_EQ(clamped[0].x1, 10.0);
  EXPECT_EQ(clamped[0].y0, 0.0);
}

TEST(Postprocess, EmptyAndSingleInstance) {
  UniformSource rng(4);
  RawDetections raw = random_raw(rng, 3, 4, 4);
  raw.scores = {0.1, 0.2, 0.3};
  PostprocessConfig cfg;
  cfg.original_size = {8, 8};
  EXPECT_TRUE(postprocess(raw, cfg).empty());
  EXPECT_TRUE(postprocess(RawDetections{}, cfg).empty());

  raw.scores = {0.1, 0.95, 0.3};
  const auto out = postprocess(raw, cfg);
  ASSERT_EQ(out.size(), 1u);
  const CornerBox box = scale_boxes({raw.boxes[1]}, cfg.input_size, cfg.original_size)[0];
  EXPECT_EQ(out[0].box_px.x0, box.x0);
  EXPECT_EQ(out[0].mask, crop_to_box(binarize(upscale_mask(raw.mask_logits.slice(1), {8, 8}), 0.5), box));
  EXPECT_EQ(out[0].class_id, raw.class_ids[1]);
}

TEST(Postprocess, SortedContainedMonotoneDeterministic) {
  UniformSource rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const RawDetections raw = random_raw(rng, 1 + trial % 9, 6, 5);
    PostprocessConfig cfg;
    cfg.original_size = {static_cast<std::size_t>(12 + trial % 5), static_cast<std::size_t>(10 + trial % 7)};
    cfg.conf_threshold = 0.3;
    const auto out = postprocess(raw, cfg);
    EXPECT_TRUE(std::is_sorted(out.begin(), out.end(),
                               [](const Instance& a, const Instance& b) { return a.score > b.score; }));
    for (const auto& inst : out) {
      for (std::size_t y = 0; y < inst.mask.height; ++y)
        for (std::size_t x = 0; x < inst.mask.width; ++x)
          if (outside(inst.box_px, y, x)) EXPECT_EQ(inst.mask.at(y, x), 0);
    }
    std::size_t prev = out.size();
    for (double th : {0.4, 0.5, 0.7, 0.9, 1.0}) {
      cfg.conf_threshold = th;
      const std::size_t n = postprocess(raw, cfg).size();
      EXPECT_LE(n, prev);
      prev = n;
    }
    cfg.conf_threshold = 0.3;
    const auto again = postprocess(raw, cfg);
    ASSERT_EQ(again.size(), out.size());
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(again[i].mask, out[i].mask);
  }
}
