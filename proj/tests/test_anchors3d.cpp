#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "geodepth/anchors3d.hpp"
#include "geodepth/errors.hpp"

using namespace geodepth;

namespace {

CameraModel cam() { return CameraModel::pinhole({700, 700, 600, 180}, 1200, 360); }

DetectionBox car(double x, double z, double yaw) {
  DetectionBox b;
  b.center = {x, 0.9, z};
  b.dims = {1.6, 1.5, 4.0};
  b.yaw = yaw;
  b.alpha = obs_angle(x, z, yaw);
  b.box2d = project_box3d(cam(), b);
  return b;
}

}  // namespace

TEST(Angles, ObservationAngle) {
  EXPECT_NEAR(obs_angle(0, 10, 0.7), 0.7, 1e-12);
  EXPECT_NEAR(obs_angle(3, 10, std::atan2(3, 10)), 0.0, 1e-12);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 1000; ++i) {
    const double x = 20 * u(rng), z = 1 + 40 * (u(rng) + 1), t = M_PI * u(rng);
    EXPECT_NEAR(wrap_angle(yaw_from_obs(obs_angle(x, z, t), x, z) - t), 0.0, 1e-12);
  }
}

TEST(Angles, DoubleAngleCodec) {
  for (double a : {-3.0, -1.0, 0.0, 0.5, 2.9}) {
    const double back = decode_double_angle(encode_double_angle(a));
    EXPECT_NEAR(std::sin(2 * (back - a)), 0.0, 1e-12);
  }
}

TEST(Iou, Basics) {
  EXPECT_DOUBLE_EQ(iou({0, 0, 2, 2}, {0, 0, 2, 2}), 1.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 1, 1}, {2, 2, 3, 3}), 0.0);
  EXPECT_NEAR(iou({0, 0, 2, 2}, {1, 0, 3, 2}), 1.0 / 3.0, 1e-15);
}

TEST(AnchorStats, Statistics) {
  AnchorTemplate t;
  t.box = {100, 100, 200, 200};
  DetectionBox a, b;
  a.box2d = b.box2d = t.box;
  a.center = {0, 0, 10};
  b.center = {0, 0, 20};
  const std::vector<AnchorTemplate> ts = {t};
  const std::vector<DetectionBox> one = {a};
  auto r = collect_anchor_stats(ts, one);
  EXPECT_DOUBLE_EQ(r[0].prior.mean_z, 10);
  EXPECT_DOUBLE_EQ(r[0].prior.var_z, 0);
  EXPECT_FALSE(r[0].prior.flagged);
  const std::vector<DetectionBox> two = {a, b};
  r = collect_anchor_stats(ts, two);
  EXPECT_DOUBLE_EQ(r[0].prior.mean_z, 15);
  EXPECT_DOUBLE_EQ(r[0].prior.var_z, 25);
  const std::vector<DetectionBox> none;
  EXPECT_TRUE(collect_anchor_stats(ts, none)[0].prior.flagged);
}

TEST(AnchorStats, DimensionPriors) {
  DetectionBox a, b;
  a.dims = {1, 2, 3};
  b.dims = {3, 2, 1};
  const std::vector<DetectionBox> labels = {a, b};
  const auto p = dimension_priors(labels);
  EXPECT_EQ(p.at(0).count, 2);
  EXPECT_EQ(p.at(0).mean, Eigen::Vector3d(2, 2, 2));
}

TEST(Backproject, Examples) {
  EXPECT_EQ(backproject_anchor(cam(), 600, 180, 20), Eigen::Vector2d(0, 0));
  EXPECT_NEAR(backproject_anchor(cam(), 670, 180, 20).x(), 2.0, 1e-12);
  const Eigen::Vector2d a = backproject_anchor(cam(), 650, 230, 10);
  const Eigen::Vector2d b = backproject_anchor(cam(), 650, 230, 20);
  EXPECT_NEAR((b - 2 * a).norm(), 0, 1e-12);
}

TEST(GroundFilter, KeepsGroundDropsFloating) {
  // Anchor whose bottom edge back-projects onto the ground vs one 5 m above it.
  auto make = [](double v_bottom, double z) {
    AnchorTemplate t;
    t.box = {580, v_bottom - 40, 620, v_bottom};
    t.prior.mean_z = z;
    t.prior.flagged = false;
    return t;
  };
  const double z = 20;
  const double v_ground = 180 + 700 * 1.65 / z;
  const double v_high = 180 + 700 * (1.65 - 5) / z;
  const std::vector<AnchorTemplate> ts = {make(v_ground, z), make(v_high, z)};
  const GroundFilterResult r = filter_ground(ts, cam());
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_EQ(r.kept[0], 0);
  GroundFilterOptions loose;
  loose.tolerance = INFINITY;
  EXPECT_EQ(filter_ground(ts, cam(), loose).kept.size(), 2u);
}

TEST(Project3D, SymmetryAndMonotonicity) {
  DetectionBox b;
  b.center = {0, 0, 10};
  b.dims = {1.6, 1.5, 4};
  const Box2D p = project_box3d(cam(), b);
  EXPECT_NEAR(p.center().x(), 600, 1e-9);
  EXPECT_NEAR(p.center().y(), 180, 1e-9);
  b.center.x() = 1;
  EXPECT_GT(project_box3d(cam(), b).x1, p.x1);
  b.center.z() = 0.5;  // width spans z in [-0.3, 1.3]
  EXPECT_THROW(project_box3d(cam(), b), BehindCamera);
}

TEST(Project3D, CornerEnumerationOracle) {
  const DetectionBox b = car(0, 10, 0);
  double x1 = INFINITY, y1 = INFINITY, x2 = -INFINITY, y2 = -INFINITY;
  for (double dx : {-2.0, 2.0}) {
    for (double dy : {-0.75, 0.75}) {
      for (double dz : {-0.8, 0.8}) {
        const double u = 700 * dx / (10 + dz) + 600;
        const double v = 700 * (0.9 + dy) / (10 + dz) + 180;
        x1 = std::min(x1, u);
        x2 = std::max(x2, u);
        y1 = std::min(y1, v);
        y2 = std::max(y2, v);
      }
    }
  }
  EXPECT_NEAR(b.box2d.x1, x1, 1e-9);
  EXPECT_NEAR(b.box2d.y1, y1, 1e-9);
  EXPECT_NEAR(b.box2d.x2, x2, 1e-9);
  EXPECT_NEAR(b.box2d.y2, y2, 1e-9);
}

TEST(HillClimb, RecoversPerturbedAngle) {
  const DetectionBox truth = car(2, 15, 0.4);
  DetectionBox start = truth;
  start.yaw = yaw_from_obs(truth.alpha + 0.2, 2, 15);
  const HillClimbResult r = hillclimb_refine(cam(), start, truth.box2d);
  EXPECT_GT(r.iou, r.initial_iou);
  EXPECT_GT(r.iou, 0.999);
  for (std::size_t i = 1; i < r.iou_trace.size(); ++i) EXPECT_GE(r.iou_trace[i], r.iou_trace[i - 1]);
}

TEST(HillClimb, OptimalStartUnchanged) {
  const DetectionBox truth = car(-1, 12, -0.3);
  const HillClimbResult r = hillclimb_refine(cam(), truth, truth.box2d);
  EXPECT_NEAR(r.box.yaw, truth.yaw, 1e-12);
  EXPECT_DOUBLE_EQ(r.iou, r.initial_iou);
}

TEST(HillClimb, AlphaAndDepthRecoversDepth) {
  const DetectionBox truth = car(1, 20, 0.2);
  DetectionBox start = truth;
  start.center *= 1.1;
  HillClimbOptions o;
  o.mode = HillClimbMode::kAlphaAndDepth;
  const HillClimbResult r = hillclimb_refine(cam(), start, truth.box2d, o);
  EXPECT_NEAR(r.box.center.z() / 20.0, 1.0, 0.02);
}
