#include <gtest/gtest.h>

#include <cmath>

#include "dfseg/matcher.hpp"
#include "oracles.hpp"

using namespace dfseg;

namespace {

InstanceTarget random_target(UniformSource& rng, std::size_t h, std::size_t w, int classes) {
  InstanceTarget t;
  t.class_id = static_cast<int>(rng.next() * classes);
  t.box = {rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), rng.uniform(0.1, 0.4), rng.uniform(0.1, 0.4)};
  t.soft_mask = rng.tensor({h, w}, 0, 1);
  return t;
}

Prediction random_prediction(UniformSource& rng, std::size_t h, std::size_t w, int classes) {
  Prediction p;
  for (int c = 0; c < classes; ++c) p.class_probs.push_back(rng.uniform(0.01, 0.99));
  p.box = {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.1, 0.5), rng.uniform(0.1, 0.5)};
  p.mask_logits = rng.tensor({h, w}, -3, 3);
  return p;
}

}  // namespace

TEST(CostMatrix, PerfectPredictionLimits) {
  InstanceTarget t;
  t.class_id = 1;
  t.box = {0.5, 0.5, 0.4, 0.2};
  t.soft_mask = Tensor({4, 4});
  for (std::size_t i = 0; i < 8; ++i) t.soft_mask[i] = 1.0;
  Prediction p{{0.0, 1.0}, t.box, Tensor({4, 4})};
  for (std::size_t i = 0; i < 16; ++i) p.mask_logits[i] = t.soft_mask[i] > 0 ? 60.0 : -60.0;
  EXPECT_NEAR(dice_cost(p.mask_logits, t.soft_mask), 0.0, 1e-12);
  CostWeights only_giou{0, 0, 1, 0, 0};
  EXPECT_NEAR(cost_matrix({p}, {t}, only_giou)(0, 0), -1.0, 1e-15);
  CostWeights only_l1{0, 1, 0, 0, 0};
  EXPECT_EQ(cost_matrix({p}, {t}, only_l1)(0, 0), 0.0);
}

TEST(CostMatrix, FocalMaskClosedFormAtHalfProbability) {
  UniformSource rng(1);
  const Tensor t = rng.tensor({5, 6}, 0, 1);
  const double pos = 0.25 * 0.25 * std::log(2.0), neg = 0.75 * 0.25 * std::log(2.0);
  double want = 0;
  for (double v : t.values()) want += v * pos + (1 - v) * neg;
  want /= 30.0;
  EXPECT_NEAR(focal_mask_cost(Tensor({5, 6}), t), want, 1e-15);
  EXPECT_NEAR(pos, 0.043322, 1e-6);
  EXPECT_NEAR(neg, 0.1299651, 1e-7);
}

TEST(CostMatrix, ZeroWeightsGiveZeroMatrix) {
  UniformSource rng(2);
  std::vector<Prediction> preds;
  std::vector<InstanceTarget> targets;
  for (int i = 0; i < 3; ++i) preds.push_back(random_prediction(rng, 6, 6, 3));
  for (int i = 0; i < 2; ++i) targets.push_back(random_target(rng, 6, 6, 3));
  const Tensor c = cost_matrix(preds, targets, CostWeights{0, 0, 0, 0, 0});
  for (double v : c.values()) EXPECT_EQ(v, 0.0);
}

TEST(CostMatrix, SumsWeightedTerms) {
  UniformSource rng(3);
  const Prediction p = random_prediction(rng, 6, 5, 2);
  const InstanceTarget t = random_target(rng, 6, 5, 2);
  const CostWeights w;
  const double want = w.w_class * class_cost(p.class_probs[t.class_id]) + w.w_l1 * l1_box(p.box, t.box) -
                      w.w_giou * generalized_iou(to_corners(p.box), to_corners(t.box)) +
                      w.w_dice * dice_cost(p.mask_logits, t.soft_mask) + w.w_focal_mask * focal_mask_cost(p.mask_logits, t.soft_mask);
  EXPECT_NEAR(cost_matrix({p}, {t}, w)(0, 0), want, 1e-12);
}

TEST(CostMatrix, RejectsResolutionMismatch) {
  UniformSource rng(4);
  const Prediction p = random_prediction(rng, 6, 6, 2);
  const InstanceTarget t = random_target(rng, 4, 4, 2);
  EXPECT_THROW(cost_matrix({p}, {t}, CostWeights{}), ShapeError);
  EXPECT_THROW(cost_matrix({}, {t}, CostWeights{}), ValidationError);
}

TEST(CostMatrix, FullMapSensitivity) {
  UniformSource rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Prediction p = random_prediction(rng, 10, 10, 2);
    const InstanceTarget t = random_target(rng, 10, 10, 2);
    const RoiRect roi = roi_rect(t.box, 10, 10);
    const double dice0 = dice_cost(p.mask_logits, t.soft_mask);
    const double focal0 = focal_mask_cost(p.mask_logits, t.soft_mask);
    for (std::size_t y = 0; y < 10; ++y)
      for (std::size_t x = 0; x < 10; ++x)
        if (!roi.contains(y, x)) p.mask_logits(y, x) += 2.0;
    EXPECT_NE(dice_cost(p.mask_logits, t.soft_mask), dice0);
    EXPECT_NE(focal_mask_cost(p.mask_logits, t.soft_mask), focal0);
  }
}

TEST(Match, EmptySides) {
  UniformSource rng(6);
  EXPECT_TRUE(match({random_prediction(rng, 4, 4, 2)}, {}, CostWeights{}).pairs.empty());
  EXPECT_TRUE(match({}, {random_target(rng, 4, 4, 2)}, CostWeights{}).pairs.empty());
}

TEST(Match, TargetsCopiedFromPredictionsFindTheirSource) {
  UniformSource rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const auto nq = static_cast<std::size_t>(2 + rng.next() * 5);
    std::vector<Prediction> preds;
    for (std::size_t i = 0; i < nq; ++i) {
      Prediction p;
      const auto cls = static_cast<std::size_t>(rng.next() * 3);
      p.class_probs = {0.02, 0.02, 0.02};
      p.class_probs[cls] = 0.98;
      p.box = {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8), rng.uniform(0.1, 0.3), rng.uniform(0.1, 0.3)};
      p.mask_logits = Tensor({8, 8});
      for (double& v : p.mask_logits.values()) v = rng.next() < 0.4 ? 40.0 : -40.0;
      preds.push_back(p);
    }
    std::vector<std::size_t> source;
    std::vector<InstanceTarget> targets;
    for (std::size_t i = 0; i < nq; ++i) {
      if (rng.next() < 0.6) continue;
      InstanceTarget t;
      t.class_id = static_cast<int>(std::max_element(preds[i].class_probs.begin(), preds[i].class_probs.end()) -
                                    preds[i].class_probs.begin());
      t.box = preds[i].box;
      t.soft_mask = Tensor({8, 8});
      for (std::size_t k = 0; k < 64; ++k) t.soft_mask[k] = preds[i].mask_logits[k] > 0 ? 1.0 : 0.0;
      targets.push_back(t);
      source.push_back(i);
    }
    if (targets.empty()) continue;
    const Assignment a = match(preds, targets, CostWeights{});
    const Tensor cost = cost_matrix(preds, targets, CostWeights{});
    EXPECT_EQ(a.total_cost, oracle::brute_force_assignment(cost));
    for (const auto& pr : a.pairs) EXPECT_EQ(pr.query, source[pr.target]);
  }
}
