#include "geodepth/epiflow.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "geodepth/errors.hpp"

namespace geodepth {
namespace {

Eigen::Matrix3d intrinsic_matrix(const PinholeParams& p) {
  Eigen::Matrix3d k;
  k << p.fx, 0.0, p.cx, 0.0, p.fy, p.cy, 0.0, 0.0, 1.0;
  return k;
}

}  // namespace

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix3d fundamental(const CameraModel& cam0, const CameraModel& cam1,
                            const RigidPose& pose_0_to_1, FundamentalForm form) {
  const Eigen::Matrix3d k0 = intrinsic_matrix(cam0.as_pinhole());
  const Eigen::Matrix3d k1 = intrinsic_matrix(cam1.as_pinhole());
  const Eigen::Vector3d& t = pose_0_to_1.translation();
  if (t.norm() < 1e-12) {
    throw DegenerateMotion(
        "fundamental: translation is zero, epipolar geometry is undefined");
  }
  const Eigen::Matrix3d e = skew(t) * pose_0_to_1.rotation();
  if (form == FundamentalForm::kVerbatim) return k1.transpose() * e * k0;
  return k1.inverse().transpose() * e * k0.inverse();
}

Eigen::Vector3d epipolar_line(const Eigen::Matrix3d& F, const Eigen::Vector2d& p) {
  return F * p.homogeneous();
}

std::optional<double> epipolar_distance(const Eigen::Matrix3d& F,
                                        const Eigen::Vector2d& p,
                                        const Eigen::Vector2d& flow) {
  const Eigen::Vector3d line = epipolar_line(F, p);
  const double norm = std::hypot(line.x(), line.y());
  // Relative to |F||p| so the result does not depend on the scale of F.
  if (norm <= 1e-12 * F.norm() * p.homogeneous().norm()) {
    return std::nullopt;
  }
  const Eigen::Vector2d end = p + flow;
  return std::abs(line.dot(end.homogeneous())) / norm;
}

std::optional<Eigen::Vector2d> epipole(const Eigen::Matrix3d& F) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(F, Eigen::ComputeFullV);
  const Eigen::Vector3d e = svd.matrixV().col(2);
  if (std::abs(e.z()) < 1e-12 * e.norm()) return std::nullopt;
  return Eigen::Vector2d(e.x() / e.z(), e.y() / e.z());
}

DynamicMask dynamic_mask(const Eigen::Matrix3d& F, const FlowField& flow,
                         const DynamicMaskOptions& options) {
  if (!(options.threshold > 0.0)) {
    throw InvalidArgument("dynamic_mask: threshold must be positive");
  }
  const int w = flow.width();
  const int h = flow.height();
  DynamicMask out{Mask(w, h, 0), Mask(w, h, 0), Mask(w, h, 0), 0};
  const std::optional<Eigen::Vector2d> e = epipole(F);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!flow.valid(x, y)) {
        out.invalid_flow(x, y) = 1;
        continue;
      }
      const Eigen::Vector2d p(x, y);
      if (e && (p - *e).norm() <= options.epipole_exclusion) {
        out.undefined(x, y) = 1;
        continue;
      }
      const auto dist =
          epipolar_distance(F, p, Eigen::Vector2d(flow.dx(x, y), flow.dy(x, y)));
      if (!dist) {
        out.undefined(x, y) = 1;
        continue;
      }
      if (*dist > options.threshold) {
        out.dynamic(x, y) = 1;
        ++out.dynamic_count;
      }
    }
  }
  return out;
}

}  // namespace geodepth
