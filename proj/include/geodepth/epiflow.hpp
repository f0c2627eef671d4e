#pragma once

#include <optional>

#include <Eigen/Core>

#include "geodepth/camgeo.hpp"
#include "geodepth/flow.hpp"

namespace geodepth {

enum class FundamentalForm {
  // F = K1^-T [t]x R K0^-1, satisfies x1^T F x0 = 0 for static points.
  kStandard,
  // F = K1^T [t]x R K0, kept only to reproduce results produced with it.
  kVerbatim,
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Fundamental matrix mapping base-frame pixels to epipolar lines in the
/// other frame. Throws DegenerateMotion when |t| < 1e-12.
Eigen::Matrix3d fundamental(const CameraModel& cam0, const CameraModel& cam1,
                            const RigidPose& pose_0_to_1,
                            FundamentalForm form = FundamentalForm::kStandard);

/// Epipolar line L = F [px, py, 1]^T of base pixel p.
Eigen::Vector3d epipolar_line(const Eigen::Matrix3d& F, const Eigen::Vector2d& p);

/// Distance from the flow endpoint p + flow to the epipolar line of p.
/// Empty when the line is undefined (p at the epipole).
std::optional<double> epipolar_distance(const Eigen::Matrix3d& F,
                                        const Eigen::Vector2d& p,
                                        const Eigen::Vector2d& flow);

struct DynamicMaskOptions {
  double threshold = 10.0;        // px
  double epipole_exclusion = 2.0; // px around the base-frame epipole
};

struct DynamicMask {
  Mask dynamic;        // 1 where the endpoint is farther than threshold
  Mask invalid_flow;   // 1 where the input flow was invalid
  Mask undefined;      // 1 where the distance is ill-conditioned (epipole)
  std::size_t dynamic_count = 0;
};

DynamicMask dynamic_mask(const Eigen::Matrix3d& F, const FlowField& flow,
                         const DynamicMaskOptions& options = {});

/// Base-frame epipole (right null vector of F) in pixels; empty when it
/// lies at infinity.
std::optional<Eigen::Vector2d> epipole(const Eigen::Matrix3d& F);

}  // namespace geodepth
