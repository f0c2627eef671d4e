#include "geodepth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Geometry>

#include "geodepth/errors.hpp"
#include "geodepth/warprecon.hpp"

namespace geodepth {

void SceneSpec::validate() const {
  if (!(ground_elevation > 0.0)) throw InvalidConfig("scene: ground elevation must be positive");
  if (poses.empty()) throw InvalidConfig("scene: at least one camera pose is required");
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const SceneBox& b = boxes[i];
    if (!(b.dims.minCoeff() > 0.0)) {
      throw InvalidConfig("scene: box " + std::to_string(i) + " has a non-positive dimension");
    }
    if (b.center.y() + b.dims.y() / 2 > ground_elevation + 1e-9) {
      throw InvalidConfig("scene: box " + std::to_string(i) + " extends below the ground plane");
    }
  }
  for (std::size_t i = 1; i < poses.size(); ++i) {
    if ((poses[i].translation() - poses[i - 1].translation()).norm() < 1e-9) {
      throw InvalidConfig("scene: degenerate camera path, frames " + std::to_string(i - 1) +
                          " and " + std::to_string(i) + " share a camera center");
    }
  }
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice(std::int64_t i, std::int64_t j, std::int64_t k, std::uint64_t seed) {
  std::uint64_t h = mix(seed);
  h = mix(h ^ static_cast<std::uint64_t>(i));
  h = mix(h ^ static_cast<std::uint64_t>(j));
  h = mix(h ^ static_cast<std::uint64_t>(k));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

// Trilinear value noise in [0, 1] with unit lattice spacing.
double value_noise(const Eigen::Vector3d& p, std::uint64_t seed) {
  const Eigen::Vector3d f = p.array().floor();
  const auto i = static_cast<std::int64_t>(f.x());
  const auto j = static_cast<std::int64_t>(f.y());
  const auto k = static_cast<std::int64_t>(f.z());
  const double tx = smooth(p.x() - f.x());
  const double ty = smooth(p.y() - f.y());
  const double tz = smooth(p.z() - f.z());
  double v = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const double w = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty) * (dz ? tz : 1 - tz);
    v += w * lattice(i + dx, j + dy, k + dz, seed);
  }
  return v;
}

double texture(const Eigen::Vector3d& p, std::uint64_t seed) {
  return 0.5 * value_noise(p * 1.3, seed) + 0.3 * value_noise(p * 4.1, seed + 1) +
         0.2 * value_noise(p * 11.7, seed + 2);
}

Eigen::Matrix3d yaw_rotation(double yaw) {
  // Same convention as box_corners: local x (length) maps to (cos, 0, -sin).
  return Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()).toRotationMatrix();
}

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  int object = -2;
  Eigen::Vector3d local = Eigen::Vector3d::Zero();  // texture coordinates
  double shade = 1.0;
};

// Slab test against a box given in its local frame (half extents h).
bool hit_box(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Eigen::Vector3d& h,
             double* t_hit, int* axis) {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  int enter = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d(a)) < 1e-15) {
      if (std::abs(o(a)) > h(a)) return false;
      continue;
    }
    double near = (-h(a) - o(a)) / d(a);
    double far = (h(a) - o(a)) / d(a);
    if (near > far) std::swap(near, far);
    if (near > t0) {
      t0 = near;
      enter = a;
    }
    t1 = std::min(t1, far);
    if (t0 > t1) return false;
  }
  if (enter < 0) return false;  // origin inside the box
  *t_hit = t0;
  *axis = enter;
  return true;
}

SceneFrame render(const SceneSpec& spec, const RigidPose& cam_to_world, int frame_index) {
  const CameraModel& cam = spec.camera;
  const int w = cam.width();
  const int h = cam.height();
  const DepthKind kind = cam.kind() == CameraKind::kPinhole ? DepthKind::kZ : DepthKind::kRadial;
  SceneFrame out{DepthMap(w, h, kind), Image(w, h, 3, ColorSpace::kRgb), Grid<std::int32_t>(w, h, -2)};

  std::vector<Eigen::Matrix3d> rot;
  std::vector<Eigen::Vector3d> centers;
  for (const SceneBox& b : spec.boxes) {
    rot.push_back(yaw_rotation(b.yaw));
    centers.push_back(b.center + frame_index * b.velocity);
  }
  const Eigen::Vector3d light = Eigen::Vector3d(0.3, -1.0, -0.4).normalized();
  const Eigen::Matrix3d& R = cam_to_world.rotation();
  const Eigen::Vector3d origin = cam_to_world.translation();

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Eigen::Vector3d dir_cam;
      try {
        dir_cam = pixel_ray(cam, {static_cast<double>(x), static_cast<double>(y)}).direction;
      } catch (const Error&) {
        continue;  // outside the model's image circle
      }
      if (kind == DepthKind::kZ && !(dir_cam.z() > 0.0)) continue;
      const Eigen::Vector3d dir = R * dir_cam;
      Hit best;
      if (dir.y() > 1e-12) {
        const double t = (spec.ground_elevation - origin.y()) / dir.y();
        if (t > 0.0) {
          best.t = t;
          best.object = -1;
          best.local = origin + t * dir;
        }
      }
      for (std::size_t b = 0; b < spec.boxes.size(); ++b) {
        const Eigen::Vector3d o = rot[b].transpose() * (origin - centers[b]);
        const Eigen::Vector3d d = rot[b].transpose() * dir;
        const Eigen::Vector3d half(spec.boxes[b].dims.z() / 2, spec.boxes[b].dims.y() / 2,
                                   spec.boxes[b].dims.x() / 2);
        double t;
        int axis;
        if (hit_box(o, d, half, &t, &axis) && t < best.t) {
          best.t = t;
          best.object = static_cast<int>(b);
          best.local = o + t * d;
          Eigen::Vector3d n = Eigen::Vector3d::Zero();
          n(axis) = d(axis) > 0 ? -1.0 : 1.0;
          best.shade = 0.55 + 0.45 * std::max(0.0, -(rot[b] * n).dot(light));
        }
      }
      out.object(x, y) = best.object;
      if (best.object == -2) {
        for (int c = 0; c < 3; ++c) out.rgb.at(x, y, c) = c == 2 ? 0.9f : 0.75f;
        continue;
      }
      const double range = best.t;  // dir is unit length
      out.depth.set(x, y, kind == DepthKind::kZ ? range * dir_cam.z() : range);
      Eigen::Vector3d color;
      if (best.object == -1) {
        const double n = texture(best.local, spec.texture_seed);
        color = Eigen::Vector3d(0.45, 0.42, 0.38) * (0.75 + 0.5 * n);
      } else {
        const double n = texture(best.local * 2.0, spec.texture_seed + 17 + best.object);
        color = spec.boxes[best.object].albedo * best.shade * (0.6 + 0.6 * n);
      }
      for (int c = 0; c < 3; ++c) {
        out.rgb.at(x, y, c) = static_cast<float>(std::clamp(color(c), 0.0, 1.0));
      }
    }
  }
  return out;
}

}  // namespace

SparseDepth sample_vo(const DepthMap& depth, const VoSpec& spec) {
  if (!(spec.coverage >= 0.0) || !(spec.coverage <= 1.0)) {
    throw InvalidConfig("vo: coverage must lie in [0, 1]");
  }
  if (!(spec.noise >= 0.0)) throw InvalidConfig("vo: noise must be non-negative");
  std::vector<int> valid;
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (depth.valid(x, y)) valid.push_back(y * depth.width() + x);
    }
  }
  const auto count = static_cast<std::size_t>(std::llround(spec.coverage * valid.size()));
  std::mt19937_64 rng(spec.seed);
  // Partial Fisher-Yates with explicit index arithmetic keeps the draw
  // sequence independent of the standard library's distributions.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng() % (valid.size() - i);
    std::swap(valid[i], valid[j]);
  }
  std::sort(valid.begin(), valid.begin() + static_cast<std::ptrdiff_t>(count));
  SparseDepth out;
  out.reserve(count);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < count; ++i) {
    const int x = valid[i] % depth.width();
    const int y = valid[i] / depth.width();
    double d = depth.depth(x, y);
    if (spec.noise > 0.0) d *= std::exp(spec.noise * gauss(rng));
    out.push_back({static_cast<double>(x), static_cast<double>(y), d});
  }
  return out;
}

SynthScene synth_scene(const SceneSpec& spec) {
  spec.validate();
  SynthScene scene;
  for (std::size_t i = 0; i < spec.poses.size(); ++i) {
    scene.frames.push_back(render(spec, spec.poses[i], static_cast<int>(i)));
    VoSpec vo = spec.vo;
    vo.seed = mix(spec.vo.seed + i);
    scene.vo.push_back(sample_vo(scene.frames.back().depth, vo));
  }
  for (std::size_t i = 0; i + 1 < spec.poses.size(); ++i) {
    const RigidPose rel = spec.poses[i + 1].inverse() * spec.poses[i];
    scene.relative.push_back(rel);
    const SceneFrame& f = scene.frames[i];
    FlowField flow = synth_static_flow(f.depth, spec.camera, spec.camera, rel);
    // Moving boxes: follow the box point to its next position.
    for (int y = 0; y < flow.height(); ++y) {
      for (int x = 0; x < flow.width(); ++x) {
        const int b = f.object(x, y);
        if (b < 0 || spec.boxes[b].velocity.isZero() || !f.depth.valid(x, y)) continue;
        const Eigen::Vector3d p_cam = unproject(spec.camera, {double(x), double(y)},
                                                f.depth.depth(x, y), f.depth.kind());
        const Eigen::Vector3d p_world = spec.poses[i] * p_cam + spec.boxes[b].velocity;
        const Projection q = project(spec.camera, spec.poses[i + 1].inverse() * p_world);
        flow.valid(x, y) = q.defined;
        flow.dx(x, y) = static_cast<float>(q.pixel.x() - x);
        flow.dy(x, y) = static_cast<float>(q.pixel.y() - y);
      }
    }
    scene.flows.push_back(std::move(flow));
  }
  return scene;
}

}  // namespace geodepth
