#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "geodepth/camgeo.hpp"
#include "geodepth/flow.hpp"
#include "geodepth/image.hpp"
#include "geodepth/postopt.hpp"

namespace geodepth {

/// Oriented box resting in the world frame (x right, y down, z forward of
/// the first camera). `dims` = (w, h, l); length runs along the heading.
struct SceneBox {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d dims = Eigen::Vector3d::Ones();
  double yaw = 0.0;
  Eigen::Vector3d albedo{0.7, 0.2, 0.2};
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // m per frame
};

struct VoSpec {
  double coverage = 0.01;  // fraction of valid pixels sampled
  double noise = 0.0;      // std of the multiplicative log-normal noise
  std::uint64_t seed = 0;
};

struct SceneSpec {
  CameraModel camera = CameraModel::pinhole({700, 700, 320, 96}, 640, 192);
  double ground_elevation = 1.65;  // ground is the plane y = elevation
  std::vector<SceneBox> boxes;
  std::vector<RigidPose> poses;  // camera-to-world, one per frame
  std::uint64_t texture_seed = 0;
  VoSpec vo;
  // Throws InvalidConfig on boxes below ground, no frames, or consecutive
  // frames without camera translation.
  void validate() const;
};

struct SceneFrame {
  DepthMap depth;  // z-depth for pinhole cameras, radial otherwise
  Image rgb;
  Grid<std::int32_t> object;  // box index, -1 ground, -2 nothing hit
};

struct SynthScene {
  std::vector<SceneFrame> frames;
  // flows[i] maps frame i pixels to frame i + 1.
  std::vector<FlowField> flows;
  // relative[i] maps frame-i camera coordinates to frame i + 1.
  std::vector<RigidPose> relative;
  std::vector<SparseDepth> vo;  // per frame
};

/// Ray-cast rendering of the ground plane and boxes with a procedural
/// texture fixed to world points, so colors agree across frames.
SynthScene synth_scene(const SceneSpec& spec);

/// VO-like sparse samples of a depth map: round(coverage * valid) distinct
/// valid pixels, depth times exp(noise * N(0, 1)).
SparseDepth sample_vo(const DepthMap& depth, const VoSpec& spec);

}  // namespace geodepth
