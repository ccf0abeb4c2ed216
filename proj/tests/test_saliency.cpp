// Copyright 2026 The lzu Authors
// SPDX-License-Identifier: Apache-2.0

#include <lzu/saliency.hpp>

#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

namespace lzu {
namespace {

constexpr std::pair<std::size_t, std::size_t> kRef{1200, 1920};

TEST(KdeSaliency, NoBoxesIsUniformOne) {
  const auto s = kde_saliency({}, {}, {31, 51}, kRef);
  for (double v : s.values()) EXPECT_EQ(v, 1.0);
}

TEST(KdeSaliency, TinyAmplitudeIsNearlyUniform) {
  const auto s = kde_saliency({{0.3, 0.6, 0.2, 0.2}, {0.9, 0.1, 0.05, 0.1}}, {1e-12, 64}, {31, 51}, kRef);
  for (double v : s.values()) EXPECT_NEAR(v, 1.0, 1e-9);
}

TEST(KdeSaliency, CenteredBoxPeaksAtTwoAndMatchesDirectFormula) {
  const Box2D box{0.5, 0.5, 0.3, 0.2};
  const auto s = kde_saliency({box}, {1.0, 64.0}, {31, 51}, kRef);
  EXPECT_DOUBLE_EQ(s.at(15, 25), 2.0);
  for (std::size_t r = 0; r < 31; r += 5)
    for (std::size_t c = 0; c < 51; c += 7) {
      const double dx = (c / 50.0 - 0.5) * 1920.0, dy = (r / 30.0 - 0.5) * 1200.0;
      EXPECT_NEAR(s.at(r, c), 1.0 + std::exp(-(dx * dx + dy * dy) / (2 * 64.0 * 64.0)), 1e-12);
    }
}

TEST(KdeSaliency, DecreasesAwayFromTheCenter) {
  const auto s = kde_saliency({{0.5, 0.5, 0.1, 0.1}}, {3.0, 200.0}, {31, 51}, kRef);
  for (std::size_t c = 25; c + 1 < 51; ++c) EXPECT_GT(s.at(15, c), s.at(15, c + 1));
  for (std::size_t r = 15; r + 1 < 31; ++r) EXPECT_GT(s.at(r, 25), s.at(r + 1, 25));
  for (double v : s.values()) {
    EXPECT_GE(v, 1.0);
    EXPECT_LE(v, 4.0);
  }
}

TEST(KdeSaliency, MirroredBoxesGiveMirroredMap) {
  const auto a = kde_saliency({{0.2, 0.4, 0.1, 0.1}, {0.7, 0.8, 0.2, 0.1}}, {1.5, 150}, {31, 51}, kRef);
  const auto b = kde_saliency({{0.8, 0.4, 0.1, 0.1}, {0.3, 0.8, 0.2, 0.1}}, {1.5, 150}, {31, 51}, kRef);
  const auto m = a.mirrored_x();
  for (std::size_t i = 0; i < m.values().size(); ++i) EXPECT_NEAR(m.values()[i], b.values()[i], 1e-12);
}

TEST(KdeSaliency, ExtentDoesNotMatter) {
  const auto a = kde_saliency({{0.4, 0.4, 0.05, 0.05}}, {}, {11, 17}, kRef);
  const auto b = kde_saliency({{0.4, 0.4, 0.9, 1.0}}, {}, {11, 17}, kRef);
  for (std::size_t i = 0; i < a.values().size(); ++i) EXPECT_EQ(a.values()[i], b.values()[i]);
}

TEST(KdeSaliency, RejectsBadParameters) {
  EXPECT_THROW(kde_saliency({}, {0.0, 64}, {31, 51}, kRef), InvalidArgument);
  EXPECT_THROW(kde_saliency({}, {1.0, -1}, {31, 51}, kRef), InvalidArgument);
  EXPECT_THROW(kde_saliency({{1.2, 0.5, 0.1, 0.1}}, {}, {31, 51}, kRef), ValidationError);
  EXPECT_THROW(kde_saliency({{0.5, 0.5, 0.0, 0.1}}, {}, {31, 51}, kRef), ValidationError);
  EXPECT_THROW(kde_saliency({}, {}, {1, 51}, kRef), InvalidArgument);
}

TEST(ParseBoxes, ReadsCommentsAndBlankLines) {
  std::istringstream in("# header\n\n0.5 0.5 0.2 0.1\n  0.1 0.9 0.05 0.05\r\n");
  const auto b = parse_boxes(in);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[1].cx, 0.1);
  EXPECT_EQ(b[1].h, 0.05);
}

TEST(ParseBoxes, EmptyInputGivesNoBoxes) {
  std::istringstream in("");
  EXPECT_TRUE(parse_boxes(in).empty());
}

TEST(ParseBoxes, MalformedLinesAreReported) {
  for (const char* bad : {"0.5 0.5 0.2\n", "0.5 0.5 0.2 0.1 9\n", "a b c d\n", "0.5 0.5 0.2 1.5\n",
                          "-0.1 0.5 0.2 0.2\n"}) {
    std::istringstream in(bad);
    EXPECT_THROW(parse_boxes(in), ValidationError) << bad;
  }
  std::istringstream in("0.5 0.5 0.1 0.1\n0.5 x\n");
  try {
    parse_boxes(in);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

LabelGrid half_split(std::size_t h, std::size_t w) {
  LabelGrid g{h, w, std::vector<std::int32_t>(h * w, 0)};
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = w / 2; c < w; ++c) g.labels[r * w + c] = 1;
  return g;
}

TEST(BoundarySaliency, ConstantLabelsGiveBackground) {
  const LabelGrid g{20, 30, std::vector<std::int32_t>(600, 7)};
  const auto s = boundary_saliency(g, 200.0, 1.0, {5, 7});
  for (double v : s.values()) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(BoundarySaliency, HalfSplitPoolsToHandValues) {
  // Columns 3 and 4 are boundary pixels; pooling 8 -> 4 averages column pairs.
  const auto s = boundary_saliency(half_split(8, 8), 200.0, 1.0, {4, 4});
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_DOUBLE_EQ(s.at(r, 0), 1.0);
    EXPECT_DOUBLE_EQ(s.at(r, 1), 100.5);
    EXPECT_DOUBLE_EQ(s.at(r, 2), 100.5);
    EXPECT_DOUBLE_EQ(s.at(r, 3), 1.0);
  }
}

TEST(BoundarySaliency, DiagonalNeighborsCount) {
  LabelGrid g{5, 5, std::vector<std::int32_t>(25, 0)};
  g.labels[2 * 5 + 2] = 3;
  const auto s = boundary_saliency(g, 9.0, 1.0, {5, 5});
  std::size_t n = 0;
  for (double v : s.values()) n += v == 9.0;
  EXPECT_EQ(n, 9u);
  EXPECT_EQ(s.at(0, 0), 1.0);
  EXPECT_EQ(s.at(1, 1), 9.0);
}

TEST(BoundarySaliency, PoolingPreservesTheMean) {
  LabelGrid g{90, 150, std::vector<std::int32_t>(90 * 150)};
  for (std::size_t r = 0; r < 90; ++r)
    for (std::size_t c = 0; c < 150; ++c)
      g.labels[r * 150 + c] = static_cast<std::int32_t>((r / 13) * 7 + (c * c / 300) % 5);
  const auto fine = boundary_saliency(g, 200.0, 1.0, {90, 150});
  for (GridSpec out : {GridSpec{31, 51}, GridSpec{45, 75}, GridSpec{7, 149}}) {
    const auto s = boundary_saliency(g, 200.0, 1.0, out);
    const double a = std::accumulate(fine.values().begin(), fine.values().end(), 0.0) / 13500.0;
    const double b = std::accumulate(s.values().begin(), s.values().end(), 0.0) /
                     static_cast<double>(out.size());
    EXPECT_NEAR(a, b, 1e-9);
  }
}

TEST(BoundarySaliency, OutputSizeAndErrors) {
  const auto g = half_split(100, 100);
  const auto s = boundary_saliency(g, 200.0, 1.0, {45, 45});
  EXPECT_EQ(s.rows(), 45u);
  EXPECT_EQ(s.cols(), 45u);
  EXPECT_THROW(boundary_saliency(g, 200.0, 1.0, {101, 45}), InvalidArgument);
  EXPECT_THROW(boundary_saliency(g, 1.0, 200.0, {45, 45}), InvalidArgument);
  EXPECT_THROW(boundary_saliency(LabelGrid{}, 200.0, 1.0, {45, 45}), InvalidArgument);
}

TEST(AveragePool, IdentityAndFractionalWindows) {
  const std::vector<double> v{1, 2, 3, 4, 5, 6};
  EXPECT_EQ(average_pool(v, 1, 6, {1, 6}), v);
  const auto p = average_pool(v, 1, 6, {1, 4});
  // Windows of width 1.5.
  EXPECT_DOUBLE_EQ(p[0], (1 + 0.5 * 2) / 1.5);
  EXPECT_DOUBLE_EQ(p[1], (0.5 * 2 + 3) / 1.5);
  EXPECT_DOUBLE_EQ(p[3], (0.5 * 5 + 6) / 1.5);
}

TEST(SaliencyMap, RejectsInvalidValues) {
  EXPECT_THROW(SaliencyMap(2, 2, {1, 1, -1, 1}), ValidationError);
  EXPECT_THROW(SaliencyMap(2, 2, {0, 0, 0, 0}), ValidationError);
  EXPECT_THROW(SaliencyMap(2, 2, {1, std::nan(""), 1, 1}), ValidationError);
  EXPECT_THROW(SaliencyMap(2, 2, {1, 1, 1}), InvalidArgument);
  EXPECT_NO_THROW(SaliencyMap(2, 2, {0, 0, 0, 1e-300}));
}

}  // namespace
}  // namespace lzu
