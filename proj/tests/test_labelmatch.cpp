#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "geodepth/errors.hpp"
#include "geodepth/labelmatch.hpp"

using namespace geodepth;

namespace {

double brute_force(const Eigen::MatrixXd& c) {
  const bool tall = c.rows() > c.cols();
  const Eigen::MatrixXd m = tall ? Eigen::MatrixXd(c.transpose()) : c;
  std::vector<int> perm(m.cols());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double s = 0;
    for (int r = 0; r < m.rows(); ++r) s += m(r, perm[r]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

CameraModel cam() { return CameraModel::pinhole({700, 700, 600, 180}, 1200, 360); }

}  // namespace

TEST(IouMatrix, Values) {
  const std::vector<Box2D> p = {{0, 0, 2, 2}, {10, 10, 11, 11}};
  const std::vector<Box2D> t = {{1, 0, 3, 2}};
  const Eigen::MatrixXd m = iou_matrix(p, t);
  EXPECT_NEAR(m(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(m(1, 0), 0.0);
}

TEST(Hungarian, MatchesBruteForce) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 300; ++trial) {
    Eigen::MatrixXd c(dim(rng), dim(rng));
    for (int i = 0; i < c.size(); ++i) c.data()[i] = u(rng);
    const std::vector<int> a = hungarian(c);
    double s = 0;
    int assigned = 0;
    std::vector<int> used;
    for (int r = 0; r < c.rows(); ++r) {
      if (a[r] < 0) continue;
      s += c(r, a[r]);
      ++assigned;
      used.push_back(a[r]);
    }
    std::sort(used.begin(), used.end());
    EXPECT_EQ(std::adjacent_find(used.begin(), used.end()), used.end());
    EXPECT_EQ(assigned, std::min(c.rows(), c.cols()));
    EXPECT_NEAR(s, brute_force(c), 1e-9);
  }
}

TEST(Hungarian, LexicographicTies) {
  const Eigen::MatrixXd c = Eigen::MatrixXd::Zero(3, 3);
  EXPECT_EQ(hungarian(c), (std::vector<int>{0, 1, 2}));
}

TEST(Match, IdenticalSetsPerfect) {
  const std::vector<Box2D> b = {{0, 0, 2, 2}, {5, 5, 9, 9}};
  const MatchResult r = match_min_cost(iou_matrix(b, b));
  EXPECT_EQ(r.kept.size(), 2u);
  EXPECT_TRUE(r.rejected.empty());
  EXPECT_NEAR(r.total_cost, 0, 1e-15);
}

TEST(Match, LowIouRejected) {
  Eigen::MatrixXd iou(1, 1);
  iou(0, 0) = 0.3;
  const MatchResult r = match_min_cost(iou, 0.5);
  EXPECT_TRUE(r.kept.empty());
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_THROW(match_min_cost(iou, 0.0), InvalidArgument);
}

TEST(Gaussian, RadiusAndSplat) {
  EXPECT_GT(gaussian_radius(20, 30), 0);
  Grid<float> h(9, 9);
  splat_gaussian(h, {4, 4}, 2);
  EXPECT_FLOAT_EQ(h(4, 4), 1.0f);
  EXPECT_LT(h(5, 4), 1.0f);
  EXPECT_EQ(h(0, 0), 0.0f);
}

TEST(Gaussian, OverlapIsMaxNotSum) {
  Grid<float> a(12, 6), b(12, 6), both(12, 6);
  splat_gaussian(a, {4, 3}, 3);
  splat_gaussian(b, {7, 3}, 3);
  splat_gaussian(both, {4, 3}, 3);
  splat_gaussian(both, {7, 3}, 3);
  for (std::size_t i = 0; i < both.size(); ++i) EXPECT_EQ(both[i], std::max(a[i], b[i]));
}

TEST(PseudoLabels, SingleObjectPeak) {
  DetectionBox p;
  p.center = {0, 0, 10};
  p.dims = {1.6, 1.5, 4};
  p.box2d = {560, 140, 640, 220};
  const Annotation2D t{{562, 141, 641, 219}, 0};
  const std::vector<DetectionBox> preds = {p};
  const std::vector<Annotation2D> annots = {t};
  const PseudoLabelSet s = build_pseudo_labels(preds, annots, cam());
  ASSERT_EQ(s.labels.size(), 1u);
  EXPECT_EQ(s.labels[0].box2d.x1, 562);
  EXPECT_EQ(s.labels[0].center, p.center);
  EXPECT_FLOAT_EQ(s.heatmap(150, 45), 1.0f);
  EXPECT_EQ(s.heatmap.width(), 300);
  EXPECT_FLOAT_EQ(*std::max_element(s.heatmap.data().begin(), s.heatmap.data().end()), 1.0f);
}

TEST(PseudoLabels, MisdetectionRemovedAndEmptyHeatmap) {
  DetectionBox p;
  p.center = {0, 0, 10};
  p.box2d = {560, 140, 640, 220};
  const Annotation2D t{{600, 180, 700, 260}, 0};
  const std::vector<DetectionBox> preds = {p};
  const std::vector<Annotation2D> annots = {t};
  const PseudoLabelSet s = build_pseudo_labels(preds, annots, cam());
  EXPECT_TRUE(s.labels.empty());
  EXPECT_EQ(s.removed, 1);
  for (float v : s.heatmap.data()) EXPECT_EQ(v, 0.0f);
}

TEST(PseudoLabels, CategoriesMatchSeparately) {
  DetectionBox p;
  p.center = {0, 0, 10};
  p.box2d = {560, 140, 640, 220};
  p.category = 1;
  const Annotation2D t{{560, 140, 640, 220}, 0};
  const std::vector<DetectionBox> preds = {p};
  const std::vector<Annotation2D> annots = {t};
  EXPECT_TRUE(build_pseudo_labels(preds, annots, cam()).labels.empty());
}

TEST(SelectiveMask, Examples) {
  const std::vector<int> all = {0, 6};
  const SelectiveMask m = selective_mask(CategoryMask({0}), all);
  EXPECT_TRUE(m.supervised[0]);
  EXPECT_FALSE(m.supervised[1]);
  EXPECT_TRUE(m.warning.empty());
  const SelectiveMask full = selective_mask(CategoryMask({0, 6}), all);
  EXPECT_TRUE(full.supervised[0] && full.supervised[1]);
  const std::vector<int> tram = {6};
  const SelectiveMask none = selective_mask(CategoryMask({0}), tram);
  EXPECT_FALSE(none.supervised[0]);
  EXPECT_FALSE(none.warning.empty());
  const std::vector<int> bogus = {42};
  EXPECT_THROW(selective_mask(CategoryMask({0}), bogus), InvalidArgument);
  EXPECT_THROW(selective_mask(CategoryMask({-1}), all), InvalidArgument);
  EXPECT_THROW(CategoryMask({}), InvalidArgument);
}
