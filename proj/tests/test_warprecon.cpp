#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "geodepth/errors.hpp"
#include "geodepth/warprecon.hpp"

using namespace geodepth;

namespace {

CameraModel cam() { return CameraModel::pinhole({200, 200, 40, 20}, 80, 40); }

Image textured(int w, int h, int seed) {
  Image img(w, h, 3, ColorSpace::kRgb);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0, 1);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

DepthMap constant_depth(int w, int h, double z) {
  DepthMap d(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) d.set(x, y, z);
  }
  return d;
}

}  // namespace

TEST(Warp, IdentityReproducesSource) {
  const Image src = textured(80, 40, 1);
  const WarpResult w = warp(src, constant_depth(80, 40, 7), cam(), cam(), RigidPose::identity());
  EXPECT_LT(photometric_loss(src, w.image, {}, &w.valid).mean, 1e-6);
}

TEST(Warp, TranslationShiftsByDisparity) {
  // Ramp image so bilinear sampling is exact.
  Image src(80, 40, 1, ColorSpace::kGray);
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 80; ++x) src.at(x, y, 0) = 0.01f * x;
  }
  for (double z : {10.0, 20.0}) {
    const double b = 0.5;
    const WarpResult w = warp(src, constant_depth(80, 40, z), cam(), cam(), {Eigen::Matrix3d::Identity(), {b, 0, 0}});
    const double shift = 200 * b / z;
    for (int x = 0; x < 60; ++x) {
      ASSERT_TRUE(w.valid(x, 10));
      EXPECT_NEAR(w.image.at(x, 10, 0), 0.01 * (x + shift), 1e-5);
    }
  }
}

TEST(Warp, OutOfViewInvalid) {
  const WarpResult w = warp(textured(80, 40, 2), constant_depth(80, 40, 1), cam(), cam(),
                            {Eigen::Matrix3d::Identity(), {5, 0, 0}});
  EXPECT_EQ(w.valid(79, 5), 0);
}

TEST(Warp, StaticFlowDisparity) {
  const FlowField f = synth_static_flow(constant_depth(80, 40, 10), cam(), cam(),
                                        {Eigen::Matrix3d::Identity(), {-1, 0, 0}});
  EXPECT_NEAR(f.dx(30, 10), -20.0, 1e-5);
  EXPECT_NEAR(f.dy(30, 10), 0.0, 1e-5);
  const FlowField z = synth_static_flow(constant_depth(80, 40, 10), cam(), cam(), RigidPose::identity());
  EXPECT_NEAR(z.dx(30, 10), 0.0, 1e-6);
}

TEST(Warp, WarpWithFlowMatchesGeometricWarp) {
  const Image src = textured(80, 40, 4);
  const DepthMap d = constant_depth(80, 40, 8);
  const RigidPose pose(Eigen::Matrix3d::Identity(), {0.2, 0.05, 0});
  const WarpResult a = warp(src, d, cam(), cam(), pose);
  const WarpResult b = warp_with_flow(src, synth_static_flow(d, cam(), cam(), pose));
  for (int y = 5; y < 35; ++y) {
    for (int x = 5; x < 60; ++x) {
      if (a.valid(x, y) && b.valid(x, y)) {
        EXPECT_NEAR(a.image.at(x, y, 1), b.image.at(x, y, 1), 1e-5);
      }
    }
  }
}

TEST(PhotoLoss, IdenticalIsZeroInvertedIsLarge) {
  const Image a = textured(40, 30, 5);
  EXPECT_NEAR(photometric_loss(a, a).mean, 0.0, 1e-12);
  Image inv = a;
  for (auto& v : inv.data()) v = 1 - v;
  EXPECT_GT(photometric_loss(a, inv).mean, 0.3);
}

TEST(PhotoLoss, ConstantImages) {
  const Image a(20, 20, 1, ColorSpace::kGray, 0.2f);
  const Image b(20, 20, 1, ColorSpace::kGray, 0.4f);
  const PhotometricLoss l = photometric_loss(a, b);
  // SSIM of constants with C1 = 0.01^2: (2 mu_a mu_b + C1) / (mu_a^2 + mu_b^2 + C1).
  const double c1 = 1e-4;
  const double ssim = (2 * 0.2 * 0.4 + c1) / (0.04 + 0.16 + c1);
  EXPECT_NEAR(l.mean, 0.85 * (1 - ssim) / 2 + 0.15 * 0.2, 1e-6);
}

TEST(PhotoLoss, ShapeMismatchThrows) {
  EXPECT_THROW(photometric_loss(textured(10, 10, 1), textured(11, 10, 1)), InvalidArgument);
}

TEST(SiLoss, Basics) {
  DepthMap gt(10, 10);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) gt.set(x, y, 3 + x + 2 * y);
  }
  const Image img(10, 10, 3, ColorSpace::kRgb, 0.5f);
  EXPECT_NEAR(si_losses(gt, gt, img).si, 0.0, 1e-12);
  DepthMap scaled(10, 10);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) scaled.set(x, y, 2.5 * gt.depth(x, y));
  }
  SiLossOptions full;
  full.lambda = 1.0;
  EXPECT_NEAR(si_losses(scaled, gt, img, full).si, 0.0, 1e-12);
  EXPECT_NEAR(smoothness_loss(constant_depth(10, 10, 4), textured(10, 10, 3)), 0.0, 1e-12);
  EXPECT_THROW(si_losses(DepthMap(10, 10), gt, img), EmptyOverlap);
}
