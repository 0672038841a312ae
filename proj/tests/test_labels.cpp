#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "dfseg/labels.hpp"
#include "oracles.hpp"

using namespace dfseg;

namespace {

std::filesystem::path write_label(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("dfseg_labels_" + name + ".txt");
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST(Rasterize, FullCoverSquare) {
  const auto targets = load_yolo_seg_labels(write_label("square", "0 0 0 1 0 1 1 0 1\n"), 2, 2, 1);
  ASSERT_EQ(targets.size(), 1u);
  EXPECT_EQ(targets[0].mask, BinaryMask(2, 2, 1));
  EXPECT_EQ(targets[0].box.cx, 0.5);
  EXPECT_EQ(targets[0].box.w, 1.0);
}

TEST(Rasterize, RightTriangleMatchesOracle) {
  const auto targets = load_yolo_seg_labels(write_label("tri", "0 0 0 1 0 0 1\n"), 8, 8, 1);
  ASSERT_EQ(targets.size(), 1u);
  const std::vector<Point> poly{{0, 0}, {8, 0}, {0, 8}};
  EXPECT_EQ(targets[0].mask, oracle::rasterize(poly, 8, 8));
  // Centers with x + y <= 8 are inside; the diagonal through centers counts.
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) EXPECT_EQ(targets[0].mask.at(y, x), (x + 0.5) + (y + 0.5) <= 8.0 ? 1 : 0);
}

TEST(Rasterize, BoundaryRules) {
  // Rectangle whose edges run exactly through pixel centers.
  const std::vector<Point> rect{{1.5, 1.5}, {4.5, 1.5}, {4.5, 3.5}, {1.5, 3.5}};
  const BinaryMask m = rasterize_polygon(rect, 6, 6);
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 0; x < 6; ++x) EXPECT_EQ(m.at(y, x), (x >= 1 && x <= 4 && y >= 1 && y <= 3) ? 1 : 0);
  EXPECT_EQ(m, oracle::rasterize(rect, 6, 6));
  // Degenerate sliver: a single vertex on a center still marks it.
  const std::vector<Point> sliver{{2.5, 2.5}, {2.6, 2.2}, {2.7, 2.3}};
  EXPECT_EQ(rasterize_polygon(sliver, 5, 5).at(2, 2), 1);
}

TEST(Rasterize, RandomPolygonsMatchOracle) {
  UniformSource rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t h = 8 + trial % 25, w = 8 + (trial * 7) % 25;
    const auto poly = oracle::random_star_polygon(rng, rng.uniform(0, w), rng.uniform(0, h), 0.5,
                                                  0.6 * std::max(h, w), 3 + trial % 10);
    EXPECT_EQ(rasterize_polygon(poly, h, w), oracle::rasterize(poly, h, w)) << "trial " << trial;
  }
}

TEST(Rasterize, LatticePolygonsMatchOracle) {
  // Vertices on the half-integer lattice hit every boundary case.
  UniformSource rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    auto poly = oracle::random_star_polygon(rng, 6, 6, 1, 6, 3 + trial % 8);
    for (auto& p : poly) {
      p.x = std::round(p.x * 2) / 2;
      p.y = std::round(p.y * 2) / 2;
    }
    EXPECT_EQ(rasterize_polygon(poly, 12, 12), oracle::rasterize(poly, 12, 12)) << "trial " << trial;
  }
}

TEST(Labels, EmptyAndMissingFiles) {
  EXPECT_TRUE(load_yolo_seg_labels(write_label("empty", ""), 4, 4, 1).empty());
  EXPECT_TRUE(load_yolo_seg_labels(write_label("blank", "\n  \n"), 4, 4, 1).empty());
  EXPECT_TRUE(load_yolo_seg_labels("/nonexistent/dfseg/label.txt", 4, 4, 1).empty());
}

TEST(Labels, ErrorsNameTheLine) {
  auto expect_line = [](const std::string& text, const std::string& needle) {
    try {
      load_yolo_seg_labels(write_label("bad", text), 4, 4, 2);
      ADD_FAILURE() << "no error for: " << text;
    } catch (const ValidationError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_line("0 0 0 1 0 1 1\n1 0 0 1 0 1\n", ":2:");
  expect_line("0 0 0 1 0 1 1\n\n2 0 0 1 0 1 1\n", ":3:");
  expect_line("0 0 0 1 0 1 x\n", ":1:");
  expect_line("0 0 0 1 0\n", ":1:");
  expect_line("-1 0 0 1 0 1 1\n", ":1:");
}

TEST(Labels, CoordinatesAreClamped) {
  const auto t = load_yolo_seg_labels(write_label("clamp", "1 -0.5 -0.5 1.5 -0.5 1.5 1.5 -0.5 1.5\n"), 3, 3, 2);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].class_id, 1);
  EXPECT_EQ(t[0].mask.count(), 9u);
  EXPECT_EQ(t[0].box.w, 1.0);
}
