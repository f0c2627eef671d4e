#include <cmath>
#include <random>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "geodepth/camgeo.hpp"
#include "geodepth/errors.hpp"

using namespace geodepth;

namespace {

CameraModel kitti() { return CameraModel::pinhole({700, 700, 600, 180}, 1200, 360); }

CameraModel mei() { return CameraModel::mei({400, 400, 320, 240, 0.9, -0.1, 0.02}, 640, 480); }

CameraModel fisheye() {
  return CameraModel::fisheye_poly({300, 300, 320, 240, {0.05, -0.01, 0.002, -0.0003}}, 640, 480);
}

}  // namespace

TEST(Camgeo, PinholeOpticalAxisHitsPrincipalPoint) {
  const Projection p = project(kitti(), {0, 0, 10});
  EXPECT_TRUE(p.visible);
  EXPECT_DOUBLE_EQ(p.pixel.x(), 600);
  EXPECT_DOUBLE_EQ(p.pixel.y(), 180);
}

TEST(Camgeo, PinholeHandEvaluated) {
  const Projection p = project(kitti(), {2, 0, 20});
  EXPECT_NEAR(p.pixel.x(), 670, 1e-12);
  EXPECT_NEAR(p.pixel.y(), 180, 1e-12);
  const Eigen::Vector3d q = unproject(kitti(), {670, 180}, 20, DepthKind::kZ);
  EXPECT_NEAR((q - Eigen::Vector3d(2, 0, 20)).norm(), 0, 1e-12);
}

TEST(Camgeo, PinholeBehindCameraIsNotVisible) {
  EXPECT_FALSE(project(kitti(), {0, 0, -1}).visible);
  EXPECT_FALSE(project(kitti(), {1, 0, 0}).visible);
}

TEST(Camgeo, NonFiniteInputThrows) {
  EXPECT_THROW(project(kitti(), {NAN, 0, 1}), InvalidArgument);
}

TEST(Camgeo, InvalidIntrinsicsThrow) {
  EXPECT_THROW(CameraModel::pinhole({-1, 700, 0, 0}, 10, 10), InvalidArgument);
  EXPECT_THROW(CameraModel::pinhole({700, 700, 0, 0}, 0, 10), InvalidArgument);
}

TEST(Camgeo, MeiAxisMapsToPrincipalPoint) {
  const Projection p = project(mei(), {0, 0, 7});
  EXPECT_NEAR(p.pixel.x(), 320, 1e-12);
  EXPECT_NEAR(p.pixel.y(), 240, 1e-12);
}

TEST(Camgeo, PrincipalPointRadialDepthLiesOnAxis) {
  for (const CameraModel& cam : {kitti(), mei(), fisheye()}) {
    const Eigen::Vector3d q = unproject(cam, cam.principal_point(), 3.5, DepthKind::kRadial);
    EXPECT_NEAR(q.x(), 0, 1e-9);
    EXPECT_NEAR(q.y(), 0, 1e-9);
    EXPECT_NEAR(q.z(), 3.5, 1e-9);
  }
}

TEST(Camgeo, RoundTripsAllModels) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  for (const CameraModel& cam : {kitti(), mei(), fisheye()}) {
    for (int i = 0; i < 500; ++i) {
      const Eigen::Vector2d px(u(rng) * cam.width(), u(rng) * cam.height());
      const Eigen::Vector3d p = unproject(cam, px, 5.0, DepthKind::kRadial);
      EXPECT_NEAR(p.norm(), 5.0, 1e-9);
      const Projection q = project(cam, p);
      ASSERT_TRUE(q.defined);
      EXPECT_LT((q.pixel - px).norm(), 1e-6);
    }
  }
}

TEST(Camgeo, RadialAndZDepthConvert) {
  const CameraModel cam = kitti();
  const Eigen::Vector2d px(900, 40);
  const double r = z_to_radial(cam, px, 12.0);
  EXPECT_NEAR(radial_to_z(cam, px, r), 12.0, 1e-12);
  EXPECT_NEAR(unproject(cam, px, 12.0, DepthKind::kZ).norm(), r, 1e-9);
}

TEST(Camgeo, RayDirectionsAreUnit) {
  for (const CameraModel& cam : {kitti(), mei(), fisheye()}) {
    EXPECT_NEAR(pixel_ray(cam, {100, 50}).direction.norm(), 1.0, 1e-9);
  }
}

TEST(Camgeo, TransformBasics) {
  EXPECT_EQ(transform(RigidPose::identity(), {1, 2, 3}), Eigen::Vector3d(1, 2, 3));
  const RigidPose t(Eigen::Matrix3d::Identity(), {0, 0, 1});
  EXPECT_EQ(transform(t, Eigen::Vector3d::Zero()), Eigen::Vector3d(0, 0, 1));
}

TEST(Camgeo, PoseInverseComposesToIdentity) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Quaterniond q = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized();
    const RigidPose pose(q.toRotationMatrix(), {n(rng), n(rng), n(rng)});
    const Eigen::Vector3d p(n(rng), n(rng), n(rng));
    EXPECT_LT(((pose * pose.inverse()) * p - p).norm(), 1e-9);
    EXPECT_LT((pose.inverse() * (pose * p) - p).norm(), 1e-9);
  }
}

TEST(Camgeo, NonOrthonormalRotationRejected) {
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
  r(0, 0) = 1.01;
  EXPECT_THROW(RigidPose(r, Eigen::Vector3d::Zero()), InvalidArgument);
  EXPECT_THROW(RigidPose(-Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero()), InvalidArgument);
}

TEST(Camgeo, NearestRotationProjection) {
  Eigen::Matrix<double, 3, 4> m;
  m << 1.0000003, 0, 0, 1, 0, 0.9999998, 0, 2, 0, 0, 1, 3;
  const RigidPose p = RigidPose::from_matrix_3x4_nearest(m);
  EXPECT_LT((p.rotation().transpose() * p.rotation() - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  EXPECT_EQ(p.translation(), Eigen::Vector3d(1, 2, 3));
}

TEST(Camgeo, ScaledCameraScalesIntrinsics) {
  const CameraModel half = kitti().scaled(0.5);
  EXPECT_DOUBLE_EQ(half.focal_x(), 350);
  EXPECT_EQ(half.width(), 600);
}
