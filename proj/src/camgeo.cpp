#include "geodepth/camgeo.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "geodepth/errors.hpp"

namespace geodepth {
namespace {

constexpr int kNewtonMaxIterations = 20;
constexpr double kNewtonTolerance = 1e-12;
constexpr double kMeiDenominatorEps = 1e-9;
constexpr double kTiny = 1e-15;

bool finite(const Eigen::Vector3d& p) { return p.allFinite(); }

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidArgument(std::string("camera: ") + name +
                          " must be positive and finite");
  }
}

void require_finite(double value, const char* name) {
  if (!std::isfinite(value)) {
    throw InvalidArgument(std::string("camera: ") + name + " must be finite");
  }
}

void require_size(int width, int height) {
  if (width < 1 || height < 1) {
    throw InvalidArgument("camera: image size must be at least 1x1");
  }
}

// Largest radius r (or theta) such that the distortion polynomial
// p(r) = r * (1 + c1 r^2 + c2 r^4 + ...) is strictly increasing on [0, r].
// Returns `upper` when the derivative stays positive up to it.
template <std::size_t N>
double monotone_limit(const std::array<double, N>& coeffs, double upper) {
  auto derivative = [&](double r) {
    const double r2 = r * r;
    double pow = r2;
    double d = 1.0;
    for (std::size_t i = 0; i < N; ++i) {
      d += static_cast<double>(2 * i + 3) * coeffs[i] * pow;
      pow *= r2;
    }
    return d;
  };
  constexpr int kSteps = 20000;
  double prev = 0.0;
  for (int i = 1; i <= kSteps; ++i) {
    const double r = upper * i / kSteps;
    if (derivative(r) <= 0.0) {
      double lo = prev;
      double hi = r;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (derivative(mid) > 0.0 ? lo : hi) = mid;
      }
      return lo;
    }
    prev = r;
  }
  return upper;
}

template <std::size_t N>
double distort(const std::array<double, N>& coeffs, double r) {
  const double r2 = r * r;
  double pow = r2;
  double factor = 1.0;
  for (std::size_t i = 0; i < N; ++i) {
    factor += coeffs[i] * pow;
    pow *= r2;
  }
  return r * factor;
}

// Newton inversion of distort() starting from r0 = target.
template <std::size_t N>
double undistort(const std::array<double, N>& coeffs, double target,
                 const char* model) {
  double r = target;
  double residual = 0.0;
  for (int it = 0; it < kNewtonMaxIterations; ++it) {
    const double r2 = r * r;
    double pow = r2;
    double deriv = 1.0;
    for (std::size_t i = 0; i < N; ++i) {
      deriv += static_cast<double>(2 * i + 3) * coeffs[i] * pow;
      pow *= r2;
    }
    residual = distort(coeffs, r) - target;
    if (!(deriv > 0.0) || !std::isfinite(deriv)) break;
    const double step = residual / deriv;
    r -= step;
    if (std::abs(step) < kNewtonTolerance) return r;
  }
  throw NumericalError(std::string(model) + ": distortion inversion did not converge",
                       std::abs(residual));
}

bool in_image(const Eigen::Vector2d& px, int width, int height) {
  return px.x() >= 0.0 && px.y() >= 0.0 && px.x() < width && px.y() < height;
}

Projection project_pinhole(const PinholeParams& p, const Eigen::Vector3d& X,
                           int w, int h) {
  Projection out;
  if (X.z() <= 0.0) return out;
  out.defined = true;
  out.pixel = {p.fx * X.x() / X.z() + p.cx, p.fy * X.y() / X.z() + p.cy};
  out.visible = in_image(out.pixel, w, h);
  return out;
}

Projection project_mei(const MeiParams& p, double max_radius,
                       const Eigen::Vector3d& X, int w, int h) {
  Projection out;
  const double norm = X.norm();
  if (norm <= 0.0) return out;
  const Eigen::Vector3d s = X / norm;
  const double denom = s.z() + p.xi;
  if (denom <= kMeiDenominatorEps) return out;
  // Beyond z = -1/xi the projection folds back onto itself (xi > 1).
  if (p.xi > 1.0 && s.z() <= -1.0 / p.xi) return out;
  const double xs = s.x() / denom;
  const double ys = s.y() / denom;
  const double r2 = xs * xs + ys * ys;
  const double factor = 1.0 + p.k1 * r2 + p.k2 * r2 * r2;
  out.defined = true;
  out.pixel = {p.gamma_x * xs * factor + p.u0, p.gamma_y * ys * factor + p.v0};
  out.visible = std::sqrt(r2) <= max_radius && in_image(out.pixel, w, h);
  return out;
}

Projection project_fisheye(const FisheyePolyParams& p, double max_theta,
                           const Eigen::Vector3d& X, int w, int h) {
  Projection out;
  if (X.z() <= 0.0) return out;
  const double a = X.x() / X.z();
  const double b = X.y() / X.z();
  const double r = std::hypot(a, b);
  const double theta = std::atan(r);
  const double theta_d = distort(p.k, theta);
  const double scale = r > kTiny ? theta_d / r : 1.0;
  out.defined = true;
  out.pixel = {p.fx * scale * a + p.cx, p.fy * scale * b + p.cy};
  out.visible = theta <= max_theta && in_image(out.pixel, w, h);
  return out;
}

Eigen::Vector3d mei_ray(const MeiParams& p, const Eigen::Vector2d& px) {
  const double mx = (px.x() - p.u0) / p.gamma_x;
  const double my = (px.y() - p.v0) / p.gamma_y;
  const double rd = std::hypot(mx, my);
  double xs = 0.0;
  double ys = 0.0;
  if (rd > kTiny) {
    const double r = undistort(std::array<double, 2>{p.k1, p.k2}, rd, "mei");
    xs = mx * r / rd;
    ys = my * r / rd;
  }
  const double rho2 = xs * xs + ys * ys;
  const double disc = 1.0 + (1.0 - p.xi * p.xi) * rho2;
  if (disc < 0.0) {
    throw InvalidArgument("mei: pixel lies outside the model's image region");
  }
  const double lambda = (p.xi + std::sqrt(disc)) / (rho2 + 1.0);
  Eigen::Vector3d dir(lambda * xs, lambda * ys, lambda - p.xi);
  return dir.normalized();
}

Eigen::Vector3d fisheye_ray(const FisheyePolyParams& p,
                            const Eigen::Vector2d& px) {
  const double mx = (px.x() - p.cx) / p.fx;
  const double my = (px.y() - p.cy) / p.fy;
  const double theta_d = std::hypot(mx, my);
  if (theta_d <= kTiny) return Eigen::Vector3d::UnitZ();
  const double theta = undistort(p.k, theta_d, "fisheye_poly");
  if (!(theta >= 0.0) || theta >= M_PI / 2) {
    throw InvalidArgument("fisheye_poly: pixel maps beyond 90 degrees");
  }
  const double s = std::sin(theta);
  return {s * mx / theta_d, s * my / theta_d, std::cos(theta)};
}

}  // namespace

std::string to_string(CameraKind kind) {
  switch (kind) {
    case CameraKind::kPinhole: return "pinhole";
    case CameraKind::kMei: return "mei";
    case CameraKind::kFisheyePoly: return "fisheye_poly";
  }
  return "unknown";
}

std::string to_string(DepthKind kind) {
  return kind == DepthKind::kZ ? "z" : "radial";
}

CameraModel::CameraModel(Params params, int width, int height)
    : params_(std::move(params)), width_(width), height_(height) {
  if (const auto* mei = std::get_if<MeiParams>(&params_)) {
    distortion_limit_ =
        (mei->k1 == 0.0 && mei->k2 == 0.0)
            ? std::numeric_limits<double>::infinity()
            : monotone_limit(std::array<double, 2>{mei->k1, mei->k2}, 10.0);
  } else if (const auto* fish = std::get_if<FisheyePolyParams>(&params_)) {
    distortion_limit_ = monotone_limit(fish->k, M_PI / 2);
  } else {
    distortion_limit_ = std::numeric_limits<double>::infinity();
  }
}

CameraModel CameraModel::pinhole(const PinholeParams& p, int width, int height) {
  require_positive(p.fx, "fx");
  require_positive(p.fy, "fy");
  require_finite(p.cx, "cx");
  require_finite(p.cy, "cy");
  require_size(width, height);
  return CameraModel(p, width, height);
}

CameraModel CameraModel::mei(const MeiParams& p, int width, int height) {
  require_positive(p.gamma_x, "gamma_x");
  require_positive(p.gamma_y, "gamma_y");
  require_finite(p.u0, "u0");
  require_finite(p.v0, "v0");
  require_finite(p.xi, "xi");
  require_finite(p.k1, "k1");
  require_finite(p.k2, "k2");
  if (p.xi < 0.0) throw InvalidArgument("camera: xi must be non-negative");
  require_size(width, height);
  return CameraModel(p, width, height);
}

CameraModel CameraModel::fisheye_poly(const FisheyePolyParams& p, int width,
                                      int height) {
  require_positive(p.fx, "fx");
  require_positive(p.fy, "fy");
  require_finite(p.cx, "cx");
  require_finite(p.cy, "cy");
  for (double k : p.k) require_finite(k, "k");
  require_size(width, height);
  return CameraModel(p, width, height);
}

CameraKind CameraModel::kind() const {
  return static_cast<CameraKind>(params_.index());
}

const PinholeParams& CameraModel::as_pinhole() const {
  if (const auto* p = std::get_if<PinholeParams>(&params_)) return *p;
  throw UnsupportedModel("operation requires a pinhole camera, got " +
                         to_string(kind()));
}

double CameraModel::focal_x() const {
  return std::visit(
      [](const auto& p) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, MeiParams>) {
          return p.gamma_x;
        } else {
          return p.fx;
        }
      },
      params_);
}

Eigen::Vector2d CameraModel::principal_point() const {
  return std::visit(
      [](const auto& p) -> Eigen::Vector2d {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, MeiParams>) {
          return {p.u0, p.v0};
        } else {
          return {p.cx, p.cy};
        }
      },
      params_);
}

CameraModel CameraModel::scaled(double factor) const {
  require_positive(factor, "scale factor");
  const int w = std::max(1, static_cast<int>(std::lround(width_ * factor)));
  const int h = std::max(1, static_cast<int>(std::lround(height_ * factor)));
  // Pixel centers sit at integer coordinates, so principal points map as
  // (c + 0.5) * s - 0.5.
  auto pp = [factor](double c) { return (c + 0.5) * factor - 0.5; };
  return std::visit(
      [&](auto p) -> CameraModel {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, MeiParams>) {
          p.gamma_x *= factor;
          p.gamma_y *= factor;
          p.u0 = pp(p.u0);
          p.v0 = pp(p.v0);
        } else {
          p.fx *= factor;
          p.fy *= factor;
          p.cx = pp(p.cx);
          p.cy = pp(p.cy);
        }
        return CameraModel(p, w, h);
      },
      params_);
}

Eigen::Vector3d Ray3::at(double depth, DepthKind kind) const {
  if (kind == DepthKind::kRadial) return direction * depth;
  if (direction.z() <= 1e-12) {
    throw InvalidArgument("z-depth is undefined for rays at or behind 90 degrees");
  }
  return direction * (depth / direction.z());
}

Projection project(const CameraModel& cam, const Eigen::Vector3d& point) {
  if (!finite(point)) throw InvalidArgument("project: non-finite point");
  const int w = cam.width();
  const int h = cam.height();
  switch (cam.kind()) {
    case CameraKind::kPinhole:
      return project_pinhole(std::get<PinholeParams>(cam.params()), point, w, h);
    case CameraKind::kMei:
      return project_mei(std::get<MeiParams>(cam.params()),
                         cam.distortion_limit(), point, w, h);
    case CameraKind::kFisheyePoly:
      return project_fisheye(std::get<FisheyePolyParams>(cam.params()),
                             cam.distortion_limit(), point, w, h);
  }
  return {};
}

Ray3 pixel_ray(const CameraModel& cam, const Eigen::Vector2d& pixel) {
  if (!pixel.allFinite()) throw InvalidArgument("unproject: non-finite pixel");
  Ray3 ray;
  switch (cam.kind()) {
    case CameraKind::kPinhole: {
      const auto& p = std::get<PinholeParams>(cam.params());
      ray.direction = Eigen::Vector3d((pixel.x() - p.cx) / p.fx,
                                      (pixel.y() - p.cy) / p.fy, 1.0)
                          .normalized();
      break;
    }
    case CameraKind::kMei:
      ray.direction = mei_ray(std::get<MeiParams>(cam.params()), pixel);
      break;
    case CameraKind::kFisheyePoly:
      ray.direction =
          fisheye_ray(std::get<FisheyePolyParams>(cam.params()), pixel);
      break;
  }
  return ray;
}

Eigen::Vector3d unproject(const CameraModel& cam, const Eigen::Vector2d& pixel,
                          double depth, DepthKind kind) {
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    throw InvalidArgument("unproject: depth must be positive and finite");
  }
  if (!pixel.allFinite()) throw InvalidArgument("unproject: non-finite pixel");
  if (cam.kind() == CameraKind::kPinhole && kind == DepthKind::kZ) {
    // Direct form keeps the pinhole round trip exact to rounding.
    const auto& p = std::get<PinholeParams>(cam.params());
    return {(pixel.x() - p.cx) / p.fx * depth, (pixel.y() - p.cy) / p.fy * depth,
            depth};
  }
  return pixel_ray(cam, pixel).at(depth, kind);
}

double z_to_radial(const CameraModel& cam, const Eigen::Vector2d& pixel,
                   double z) {
  const Ray3 ray = pixel_ray(cam, pixel);
  if (ray.direction.z() <= 1e-12) {
    throw InvalidArgument("z_to_radial: ray does not point forward");
  }
  return z / ray.direction.z();
}

double radial_to_z(const CameraModel& cam, const Eigen::Vector2d& pixel,
                   double radial) {
  return radial * pixel_ray(cam, pixel).direction.z();
}

RigidPose::RigidPose(const Eigen::Matrix3d& rotation,
                     const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw InvalidArgument("RigidPose: non-finite entries");
  }
  const double ortho =
      (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
          .cwiseAbs()
          .maxCoeff();
  if (ortho > 1e-9 || std::abs(rotation.determinant() - 1.0) > 1e-9) {
    throw InvalidArgument("RigidPose: rotation is not orthonormal with det +1");
  }
}

RigidPose RigidPose::from_matrix_3x4_nearest(
    const Eigen::Matrix<double, 3, 4>& m) {
  if (!m.allFinite()) throw InvalidArgument("RigidPose: non-finite entries");
  const Eigen::Matrix3d a = m.leftCols<3>();
  // Already a rotation to working precision: keep the bits as written.
  if ((a.transpose() * a - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-9 &&
      std::abs(a.determinant() - 1.0) <= 1e-9) {
    return RigidPose(a, m.col(3));
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(a, Eigen::ComputeFullU |
                                               Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    throw InvalidArgument("RigidPose: rotation block has negative determinant");
  }
  if ((r - a).cwiseAbs().maxCoeff() > 1e-3) {
    throw InvalidArgument("RigidPose: rotation block is far from orthonormal");
  }
  return RigidPose(r, m.col(3));
}

Eigen::Matrix<double, 3, 4> RigidPose::matrix_3x4() const {
  Eigen::Matrix<double, 3, 4> m;
  m.leftCols<3>() = rotation_;
  m.col(3) = translation_;
  return m;
}

RigidPose RigidPose::operator*(const RigidPose& other) const {
  RigidPose out;
  out.rotation_ = rotation_ * other.rotation_;
  out.translation_ = rotation_ * other.translation_ + translation_;
  return out;
}

RigidPose RigidPose::inverse() const {
  RigidPose out;
  out.rotation_ = rotation_.transpose();
  out.translation_ = -(out.rotation_ * translation_);
  return out;
}

}  // namespace geodepth
