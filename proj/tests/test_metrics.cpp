#include <gtest/gtest.h>

#include "dfseg/metrics.hpp"
#include "oracles.hpp"

using namespace dfseg;

namespace {

// Box-only detection; IoUs are set through the geometry of unit-height strips.
Detection strip(int cls, double x0, double x1, double score = 1.0) { return {cls, score, {x0, 0, x1, 1}, {}}; }

EvalConfig box_cfg() {
  EvalConfig c;
  c.iou_kind = IouKind::Box;
  return c;
}

}  // namespace

TEST(Iou, MasksAndBoxes) {
  BinaryMask a(2, 2), b(2, 2);
  a.pixels = {1, 1, 0, 0};
  b.pixels = {1, 0, 1, 0};
  EXPECT_EQ(mask_iou(a, a), 1.0);
  EXPECT_EQ(mask_iou(a, b), 1.0 / 3.0);
  BinaryMask c(2, 2);
  c.pixels = {0, 0, 1, 1};
  EXPECT_EQ(mask_iou(a, c), 0.0);
  EXPECT_EQ(mask_iou(BinaryMask(2, 2), BinaryMask(2, 2)), 0.0);
  EXPECT_THROW(mask_iou(a, BinaryMask(2, 3)), ShapeError);
  EXPECT_EQ(box_iou({0, 0, 2, 2}, {1, 1, 3, 3}), 1.0 / 7.0);
}

TEST(MatchOneToOne, RuleExamples) {
  // IoU 0.8: gt [0,1], pred [0,0.8].
  auto one = match_one_to_one({strip(0, 0, 0.8)}, {strip(0, 0, 1)}, box_cfg());
  EXPECT_EQ(one.tp, 1u);
  EXPECT_EQ(one.fp, 0u);
  EXPECT_EQ(one.fn, 0u);
  ASSERT_EQ(one.matched_ious.size(), 1u);
  EXPECT_NEAR(one.matched_ious[0], 0.8, 1e-15);

  auto dup = match_one_to_one({strip(0, 0, 0.6), strip(0, 0, 0.9)}, {strip(0, 0, 1)}, box_cfg());
  EXPECT_EQ(dup.tp, 1u);
  EXPECT_EQ(dup.fp, 1u);
  EXPECT_EQ(dup.fn, 0u);
  EXPECT_NEAR(dup.matched_ious[0], 0.9, 1e-15);

  auto cross = match_one_to_one({strip(1, 0, 0.9)}, {strip(0, 0, 1)}, box_cfg());
  EXPECT_EQ(cross.tp, 0u);
  EXPECT_EQ(cross.fp, 1u);
  EXPECT_EQ(cross.fn, 1u);
}

TEST(MatchOneToOne, ThresholdIsStrict) {
  auto half = match_one_to_one({strip(0, 0, 0.5)}, {strip(0, 0, 1)}, box_cfg());
  EXPECT_EQ(half.tp, 0u);
  EXPECT_EQ(half.fp, 1u);
  EXPECT_EQ(half.fn, 1u);
}

TEST(MatchOneToOne, TieBreakByIndex) {
  std::vector<AcceptedMatch> acc;
  match_one_to_one({strip(0, 0, 1), strip(0, 0, 1)}, {strip(0, 0, 1), strip(0, 0, 1)}, box_cfg(), &acc);
  ASSERT_EQ(acc.size(), 2u);
  EXPECT_EQ(acc[0].pred, 0u);
  EXPECT_EQ(acc[0].gt, 0u);
  EXPECT_EQ(acc[1].pred, 1u);
  EXPECT_EQ(acc[1].gt, 1u);
}

TEST(MatchOneToOne, ConservationOnRandomScenes) {
  UniformSource rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Detection> preds, gts;
    const auto np = static_cast<std::size_t>(rng.next() * 6), ng = static_cast<std::size_t>(rng.next() * 6);
    for (std::size_t i = 0; i < np; ++i) {
      preds.push_back({static_cast<int>(rng.next() * 2), rng.next(), {}, oracle::random_mask(rng, 6, 6, 0.5)});
    }
    for (std::size_t i = 0; i < ng; ++i) {
      gts.push_back({static_cast<int>(rng.next() * 2), 1.0, {}, oracle::random_mask(rng, 6, 6, 0.5)});
    }
    EvalConfig cfg;
    cfg.iou_threshold = 0.3;
    std::vector<AcceptedMatch> acc;
    const auto o = match_one_to_one(preds, gts, cfg, &acc);
    std::size_t cross = 0;
    std::vector<char> sp(np, 0), sg(ng, 0);
    for (const auto& m : acc) {
      EXPECT_FALSE(sp[m.pred]++);
      EXPECT_FALSE(sg[m.gt]++);
      EXPECT_GT(m.iou, 0.3);
      cross += m.same_class ? 0 : 1;
    }
    EXPECT_EQ(o.tp + o.fn, ng);
    EXPECT_EQ(o.tp + o.fp, np);
    EXPECT_EQ(o.matched_ious.size(), o.tp);
    const auto s = prf1(o);
    if (s.precision + s.recall > 0) EXPECT_NEAR(s.f1 * (s.precision + s.recall), 2 * s.precision * s.recall, 1e-15);
    EXPECT_LE(penalized_iou(o), safe_ratio(o.tp, o.tp + o.fp + o.fn) + 1e-15);
    EXPECT_LE(penalized_iou(o), std::min(1.0, s.precision) + 1e-15);
    (void)cross;
  }
}

TEST(Prf1, Cases) {
  EvalOutcome perfect{1, 0, 0, {1.0}};
  const auto p = prf1(perfect);
  EXPECT_EQ(p.precision, 1.0);
  EXPECT_EQ(p.recall, 1.0);
  EXPECT_EQ(p.f1, 1.0);
  const auto z = prf1(EvalOutcome{0, 3, 2, {}});
  EXPECT_EQ(z.precision, 0.0);
  EXPECT_EQ(z.recall, 0.0);
  EXPECT_EQ(z.f1, 0.0);
  EXPECT_EQ(prf1(EvalOutcome{}).f1, 0.0);
  EXPECT_NEAR(prf1_from(0.339, 0.215).f1, 0.263, 0.001);
}

TEST(PenalizedIou, Cases) {
  EXPECT_EQ(penalized_iou(EvalOutcome{1, 0, 0, {0.8}}), 0.8);
  EXPECT_NEAR(penalized_iou(EvalOutcome{1, 1, 1, {0.8}}), 0.8 / 3, 1e-12);
  EXPECT_EQ(penalized_iou(EvalOutcome{0, 4, 0, {}}), 0.0);
  EXPECT_EQ(penalized_iou(EvalOutcome{}), 0.0);
}
