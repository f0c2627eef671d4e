#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "geodepth/errors.hpp"
#include "geodepth/slic3d.hpp"

using namespace geodepth;

namespace {

DepthMap constant_depth(int w, int h, double z) {
  DepthMap d(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) d.set(x, y, z);
  }
  return d;
}

// Nearest seed label under pure spatial distance, ties to the earlier seed.
Grid<std::int32_t> voronoi(int w, int h, const std::vector<Eigen::Vector2d>& seeds) {
  Grid<std::int32_t> out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double best = INFINITY;
      for (std::size_t k = 0; k < seeds.size(); ++k) {
        const double d = (seeds[k] - Eigen::Vector2d(x, y)).norm();
        if (d < best) {
          best = d;
          out(x, y) = static_cast<std::int32_t>(k);
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST(Slic, UniformInputReproducesGrid) {
  const Image lab(64, 48, 3, ColorSpace::kLab, 50.0f);
  SlicParams p;
  p.step = 16;
  const Segmentation s = slic3d(lab, constant_depth(64, 48, 10), p);
  const auto seeds = grid_seeds(64, 48, 16);
  EXPECT_EQ(s.cluster_count(), static_cast<int>(seeds.size()));
  EXPECT_EQ(s.labels, voronoi(64, 48, seeds));
}

TEST(Slic, ZeroFeatureWeightsGiveVoronoi) {
  Image lab(48, 32, 3, ColorSpace::kLab);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<float> u(0, 100);
  for (auto& v : lab.data()) v = u(rng);
  DepthMap d(48, 32);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 48; ++x) d.set(x, y, 1 + u(rng));
  }
  SlicParams p;
  p.step = 8;
  p.lambda_lab = 0;
  p.lambda_depth = 0;
  const Segmentation s = slic3d(lab, d, p);
  EXPECT_EQ(s.labels, voronoi(48, 32, grid_seeds(48, 32, 8)));
}

TEST(Slic, TwoRegionsSeparate) {
  const int w = 64, h = 32;
  Image lab(w, h, 3, ColorSpace::kLab);
  DepthMap d(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool right = x >= 37;  // off the seed grid midline
      lab.at(x, y, 0) = right ? 100.0f : 0.0f;
      d.set(x, y, right ? 50.0 : 5.0);
    }
  }
  SlicParams p;
  p.step = 32;
  p.lambda_depth = 10;
  const Segmentation s = slic3d(lab, d, p);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      EXPECT_EQ(s.labels(x, y), s.labels(x >= 37 ? w - 1 : 0, y));
    }
  }
  EXPECT_NE(s.labels(0, 0), s.labels(w - 1, 0));
}

TEST(Slic, ObjectiveNonIncreasing) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(0, 1);
  Image lab(40, 30, 3, ColorSpace::kLab);
  for (auto& v : lab.data()) v = 100 * u(rng);
  DepthMap d(40, 30);
  for (int y = 0; y < 30; ++y) {
    for (int x = 0; x < 40; ++x) {
      if (u(rng) > 0.1) d.set(x, y, 1 + 30 * u(rng));
    }
  }
  SlicParams p;
  p.step = 8;
  const Segmentation s = slic3d(lab, d, p);
  ASSERT_GE(s.objective_trace.size(), 2u);
  for (std::size_t i = 1; i < s.objective_trace.size(); ++i) {
    EXPECT_LE(s.objective_trace[i], s.objective_trace[i - 1] * (1 + 1e-9));
  }
}

TEST(Slic, Errors) {
  const Image lab(20, 20, 3, ColorSpace::kLab);
  EXPECT_THROW(slic3d(lab, constant_depth(21, 20, 1), {}), InvalidArgument);
  SlicParams p;
  p.step = 0;
  EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(SegmentStats, MeanLogAndFlags) {
  Segmentation seg;
  seg.labels = Grid<std::int32_t>(3, 1);
  seg.labels(0, 0) = 0;
  seg.labels(1, 0) = 0;
  seg.labels(2, 0) = 1;
  seg.centers.resize(2);
  seg.counts = {2, 1};
  DepthMap d(3, 1);
  d.set(0, 0, std::exp(1.0));
  d.set(1, 0, std::exp(3.0));
  const SegmentStats s = segment_stats(seg, d);
  EXPECT_NEAR(s.mean_log_depth[0], 2.0, 1e-12);
  EXPECT_EQ(s.flagged[0], 0);
  EXPECT_EQ(s.flagged[1], 1);
  EXPECT_EQ(s.members[0].size(), 2u);
}

TEST(SegmentBoundaries, MarksLabelChanges) {
  Grid<std::int32_t> labels(4, 1);
  labels(2, 0) = 1;
  labels(3, 0) = 1;
  const Mask b = segment_boundaries(labels);
  EXPECT_EQ(b(0, 0), 0);
  EXPECT_TRUE(b(1, 0) || b(2, 0));
}
