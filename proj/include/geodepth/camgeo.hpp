#pragma once

#include <array>
#include <string>
#include <variant>

#include <Eigen/Core>

namespace geodepth {

/// Plain pinhole intrinsics (pixels).
struct PinholeParams {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
};

/// Mei unified omnidirectional model: the unit-sphere point is shifted by
/// xi along the optical axis, projected, radially distorted with (k1, k2)
/// and scaled by (gamma_x, gamma_y).
struct MeiParams {
  double gamma_x = 0.0;
  double gamma_y = 0.0;
  double u0 = 0.0;
  double v0 = 0.0;
  double xi = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
};

/// Pinhole fisheye with an odd theta polynomial
/// theta_d = theta * (1 + k1 theta^2 + k2 theta^4 + k3 theta^6 + k4 theta^8).
struct FisheyePolyParams {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  std::array<double, 4> k{};
};

enum class CameraKind { kPinhole, kMei, kFisheyePoly };

/// z-depth is distance along the optical axis, radial is the Euclidean
/// distance to the camera center.
enum class DepthKind { kZ, kRadial };

std::string to_string(CameraKind kind);
std::string to_string(DepthKind kind);

class CameraModel {
 public:
  using Params = std::variant<PinholeParams, MeiParams, FisheyePolyParams>;

  static CameraModel pinhole(const PinholeParams& p, int width, int height);
  static CameraModel mei(const MeiParams& p, int width, int height);
  static CameraModel fisheye_poly(const FisheyePolyParams& p, int width,
                                  int height);

  CameraKind kind() const;
  const Params& params() const { return params_; }
  int width() const { return width_; }
  int height() const { return height_; }

  // Throws UnsupportedModel unless the camera is the plain pinhole variant.
  const PinholeParams& as_pinhole() const;

  // Horizontal focal length of whichever variant this is.
  double focal_x() const;
  Eigen::Vector2d principal_point() const;

  // Same intrinsics at a different image resolution (intrinsics scaled).
  CameraModel scaled(double factor) const;

  // Largest undistorted radius (Mei) or incidence angle (fisheye) over which
  // the distortion polynomial is strictly increasing and hence invertible.
  // Infinite for the pinhole model.
  double distortion_limit() const { return distortion_limit_; }

 private:
  CameraModel(Params params, int width, int height);

  Params params_;
  int width_ = 0;
  int height_ = 0;
  double distortion_limit_ = 0.0;
};

struct Projection {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  // False when the point is outside the model's valid region or lands
  // outside [0, W) x [0, H). The pixel is still filled in whenever the
  // model equations are defined so callers can inspect it.
  bool visible = false;
  // True when the model equations were evaluated (pixel is meaningful).
  bool defined = false;
};

/// Unit viewing ray through a pixel, in the camera frame.
struct Ray3 {
  Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();

  // Point on the ray at the given depth. z-depth requires direction.z() > 0.
  Eigen::Vector3d at(double depth, DepthKind kind) const;
};

Projection project(const CameraModel& cam, const Eigen::Vector3d& point);

Ray3 pixel_ray(const CameraModel& cam, const Eigen::Vector2d& pixel);

Eigen::Vector3d unproject(const CameraModel& cam, const Eigen::Vector2d& pixel,
                          double depth, DepthKind kind);

// Converts a depth measured along the ray through `pixel` between the two
// parameterizations.
double z_to_radial(const CameraModel& cam, const Eigen::Vector2d& pixel,
                   double z);
double radial_to_z(const CameraModel& cam, const Eigen::Vector2d& pixel,
                   double radial);

/// Rigid transform p -> R p + t.
class RigidPose {
 public:
  RigidPose() = default;
  // Validates R^T R = I and det R = +1 to 1e-9.
  RigidPose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static RigidPose identity() { return {}; }
  // Projects an approximately orthonormal 3x4 [R|t] onto SO(3) first. Used
  // for pose files written with limited decimal precision.
  static RigidPose from_matrix_3x4_nearest(const Eigen::Matrix<double, 3, 4>& m);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Matrix<double, 3, 4> matrix_3x4() const;

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation_ * p + translation_;
  }
  // (a * b)(p) == a(b(p))
  RigidPose operator*(const RigidPose& other) const;
  RigidPose inverse() const;

 private:
  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

inline Eigen::Vector3d transform(const RigidPose& pose,
                                 const Eigen::Vector3d& point) {
  return pose * point;
}

}  // namespace geodepth
