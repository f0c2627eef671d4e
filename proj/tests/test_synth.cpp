#include <cmath>

#include <gtest/gtest.h>

#include "geodepth/epiflow.hpp"
#include "geodepth/errors.hpp"
#include "geodepth/groundprior.hpp"
#include "geodepth/synth.hpp"

using namespace geodepth;

namespace {

SceneSpec two_frames() {
  SceneSpec s;
  s.camera = CameraModel::pinhole({500, 500, 160, 30}, 320, 96);
  s.poses = {RigidPose::identity(), {Eigen::Matrix3d::Identity(), {0.1, 0, 1}}};
  return s;
}

}  // namespace

TEST(Synth, EmptySceneIsGroundPlane) {
  SceneSpec s = two_frames();
  const SynthScene scene = synth_scene(s);
  GroundConfig g;
  g.elevation = s.ground_elevation;
  const DepthMap& d = scene.frames[0].depth;
  for (int v = 0; v < d.height(); ++v) {
    const auto z = ground_depth(s.camera, g, v);
    for (int x = 0; x < d.width(); x += 37) {
      EXPECT_EQ(d.valid(x, v), z.has_value()) << v;
      if (z) {
        EXPECT_NEAR(d.depth(x, v), *z, 1e-9 * *z);
      }
    }
  }
}

TEST(Synth, StaticSceneHasNoDynamicPixels) {
  SceneSpec s = two_frames();
  s.boxes.push_back({{0.5, 0.9, 12}, {1.6, 1.5, 3.9}, 0.3, {0.8, 0.2, 0.2}, {0, 0, 0}});
  const SynthScene scene = synth_scene(s);
  const Eigen::Matrix3d F = fundamental(s.camera, s.camera, scene.relative[0]);
  EXPECT_EQ(dynamic_mask(F, scene.flows[0]).dynamic_count, 0u);
}

TEST(Synth, BoxOccludesGround) {
  SceneSpec s = two_frames();
  s.boxes.push_back({{0, 0.9, 10}, {1.6, 1.5, 3.9}, 0.0, {0.8, 0.2, 0.2}, {0, 0, 0}});
  const SynthScene scene = synth_scene(s);
  // Length runs along x at yaw 0, so the face toward the camera is at z = 10 - w/2.
  const int y = static_cast<int>(30 + 500 * 0.9 / 9.2);
  EXPECT_EQ(scene.frames[0].object(160, y), 0);
  EXPECT_NEAR(scene.frames[0].depth.depth(160, y), 10 - 1.6 / 2, 1e-9);
}

TEST(Synth, VoCoverageAndExactness) {
  SceneSpec s = two_frames();
  s.vo.coverage = 0.02;
  const SynthScene scene = synth_scene(s);
  const DepthMap& d = scene.frames[0].depth;
  EXPECT_EQ(scene.vo[0].size(), static_cast<std::size_t>(std::llround(0.02 * d.valid_count())));
  for (const SparseSample& p : scene.vo[0]) {
    EXPECT_EQ(p.depth, d.depth(static_cast<int>(p.u), static_cast<int>(p.v)));
  }
}

TEST(Synth, Deterministic) {
  SceneSpec s = two_frames();
  s.boxes.push_back({{0, 0.9, 10}, {1.6, 1.5, 3.9}, 0.4, {0.8, 0.2, 0.2}, {0.2, 0, 0}});
  const SynthScene a = synth_scene(s);
  const SynthScene b = synth_scene(s);
  EXPECT_EQ(a.frames[1].rgb.data(), b.frames[1].rgb.data());
  EXPECT_EQ(a.flows[0].dx, b.flows[0].dx);
}

TEST(Synth, InvalidSpecs) {
  SceneSpec s = two_frames();
  s.poses[1] = s.poses[0];
  EXPECT_THROW(synth_scene(s), InvalidConfig);
  s = two_frames();
  s.boxes.push_back({{0, 1.5, 10}, {1.6, 1.5, 3.9}, 0.0, {1, 1, 1}, {0, 0, 0}});
  EXPECT_THROW(synth_scene(s), InvalidConfig);
  s = two_frames();
  s.poses.clear();
  EXPECT_THROW(synth_scene(s), InvalidConfig);
}
