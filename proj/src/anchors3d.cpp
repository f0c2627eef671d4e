#include "geodepth/anchors3d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "geodepth/errors.hpp"

namespace geodepth {

double iou(const Box2D& a, const Box2D& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double wrap_angle(double a) {
  if (!std::isfinite(a)) throw InvalidArgument("wrap_angle: non-finite angle");
  a = std::fmod(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  if (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

double obs_angle(double x, double z, double yaw) {
  if (!(z > 0.0)) throw InvalidArgument("obs_angle: z must be positive");
  return wrap_angle(yaw - std::atan2(x, z));
}

double yaw_from_obs(double alpha, double x, double z) {
  if (!(z > 0.0)) throw InvalidArgument("yaw_from_obs: z must be positive");
  return wrap_angle(alpha + std::atan2(x, z));
}

Eigen::Vector2d encode_double_angle(double a) {
  return {std::sin(2.0 * a), std::cos(2.0 * a)};
}

double decode_double_angle(const Eigen::Vector2d& enc) {
  double a = 0.5 * std::atan2(enc.x(), enc.y());
  if (a <= -M_PI / 2) a += M_PI;
  return a;
}

namespace {

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
  }
  double mean(int n) const { return sum / n; }
  double var(int n) const {
    const double m = mean(n);
    return std::max(0.0, sum_sq / n - m * m);
  }
};

}  // namespace

std::vector<AnchorTemplate> collect_anchor_stats(
    std::span<const AnchorTemplate> templates,
    std::span<const DetectionBox> labels, double iou_threshold) {
  if (!(iou_threshold > 0.0) || !(iou_threshold < 1.0)) {
    throw InvalidArgument("anchor stats: IoU threshold must lie in (0, 1)");
  }
  std::vector<AnchorTemplate> out(templates.begin(), templates.end());
  for (AnchorTemplate& t : out) {
    if (!t.box.valid()) throw InvalidArgument("anchor stats: template box has no area");
    Moments z, s, c;
    int n = 0;
    for (const DetectionBox& label : labels) {
      if (t.category >= 0 && label.category != t.category) continue;
      if (iou(t.box, label.box2d) < iou_threshold) continue;
      z.add(label.center.z());
      s.add(std::sin(label.alpha));
      c.add(std::cos(label.alpha));
      ++n;
    }
    AnchorPrior p;
    p.matches = n;
    p.flagged = n == 0;
    if (n > 0) {
      p.mean_z = z.mean(n);
      p.var_z = z.var(n);
      p.mean_sin_alpha = s.mean(n);
      p.var_sin_alpha = s.var(n);
      p.mean_cos_alpha = c.mean(n);
      p.var_cos_alpha = c.var(n);
    }
    t.prior = p;
  }
  return out;
}

std::map<int, DimensionPrior> dimension_priors(std::span<const DetectionBox> labels) {
  std::map<int, DimensionPrior> out;
  for (const DetectionBox& label : labels) {
    DimensionPrior& p = out[label.category];
    p.mean += label.dims;
    ++p.count;
  }
  for (auto& [category, p] : out) p.mean /= p.count;
  return out;
}

Eigen::Vector2d backproject_anchor(const CameraModel& cam, double u, double v,
                                   double z_hat) {
  const PinholeParams& p = cam.as_pinhole();
  if (!(z_hat > 0.0)) throw InvalidArgument("backproject_anchor: depth must be positive");
  return {(u - p.cx) / p.fx * z_hat, (v - p.cy) / p.fy * z_hat};
}

GroundFilterResult filter_ground(std::span<const AnchorTemplate> templates,
                                 const CameraModel& cam,
                                 const GroundFilterOptions& options) {
  GroundFilterResult out;
  for (int i = 0; i < static_cast<int>(templates.size()); ++i) {
    const AnchorTemplate& t = templates[i];
    if (t.prior.flagged || !(t.prior.mean_z > 0.0)) {
      out.dropped.push_back(i);
      continue;
    }
    double tol = options.tolerance;
    if (auto it = options.category_tolerance.find(t.category);
        it != options.category_tolerance.end()) {
      tol = it->second;
    }
    const Eigen::Vector2d c = t.box.center();
    const Eigen::Vector2d xy = backproject_anchor(cam, c.x(), c.y(), t.prior.mean_z);
    if (std::abs(xy.y() - options.elevation) <= tol) {
      out.kept.push_back(i);
    } else {
      out.dropped.push_back(i);
    }
  }
  return out;
}

std::array<Eigen::Vector3d, 8> box_corners(const DetectionBox& box) {
  const double w = box.dims.x();
  const double h = box.dims.y();
  const double l = box.dims.z();
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  std::array<Eigen::Vector3d, 8> corners;
  int i = 0;
  for (double sx : {-0.5, 0.5}) {
    for (double sy : {-0.5, 0.5}) {
      for (double sz : {-0.5, 0.5}) {
        // Length runs along the heading (local x), width along local z.
        const double lx = sx * l;
        const double ly = sy * h;
        const double lz = sz * w;
        corners[i++] = box.center + Eigen::Vector3d(c * lx + s * lz, ly, -s * lx + c * lz);
      }
    }
  }
  return corners;
}

Box2D project_box3d(const CameraModel& cam, const DetectionBox& box) {
  const PinholeParams& p = cam.as_pinhole();
  double x1 = std::numeric_limits<double>::infinity();
  double y1 = x1;
  double x2 = -x1;
  double y2 = -x1;
  for (const Eigen::Vector3d& c : box_corners(box)) {
    if (!(c.z() > 0.0)) throw BehindCamera("project_box3d: corner behind the camera");
    const double u = p.fx * c.x() / c.z() + p.cx;
    const double v = p.fy * c.y() / c.z() + p.cy;
    x1 = std::min(x1, u);
    x2 = std::max(x2, u);
    y1 = std::min(y1, v);
    y2 = std::max(y2, v);
  }
  const double w = cam.width();
  const double h = cam.height();
  return {std::clamp(x1, 0.0, w), std::clamp(y1, 0.0, h), std::clamp(x2, 0.0, w),
          std::clamp(y2, 0.0, h)};
}

namespace {

struct ClimbState {
  double alpha;
  double scale;  // multiplies the center (moves along the viewing ray)
};

DetectionBox realize(const DetectionBox& base, const ClimbState& s) {
  DetectionBox b = base;
  b.center = base.center * s.scale;
  b.alpha = wrap_angle(s.alpha);
  b.yaw = yaw_from_obs(b.alpha, b.center.x(), b.center.z());
  return b;
}

// IoU of a candidate, or -1 when a corner falls behind the camera.
double score(const CameraModel& cam, const DetectionBox& base,
             const ClimbState& s, const Box2D& target) {
  try {
    return iou(project_box3d(cam, realize(base, s)), target);
  } catch (const BehindCamera&) {
    return -1.0;
  }
}

}  // namespace

namespace {

struct Climb {
  ClimbState state;
  double iou = 0.0;
  int iterations = 0;
  std::vector<double> trace;
};

// Coordinate ascent with step halving from `state`.
Climb climb(const CameraModel& cam, const DetectionBox& box, ClimbState state,
            const Box2D& target, const HillClimbOptions& options) {
  Climb out;
  double best = score(cam, box, state, target);
  out.trace.push_back(best);
  double angle_step = options.initial_angle_step;
  double depth_step = options.initial_depth_step;
  const bool with_depth = options.mode == HillClimbMode::kAlphaAndDepth;
  while (out.iterations < options.max_iterations) {
    ++out.iterations;
    ClimbState best_state = state;
    double best_score = best;
    std::vector<ClimbState> candidates = {{state.alpha + angle_step, state.scale},
                                          {state.alpha - angle_step, state.scale}};
    if (with_depth) {
      candidates.push_back({state.alpha, state.scale * (1.0 + depth_step)});
      candidates.push_back({state.alpha, state.scale * (1.0 - depth_step)});
    }
    for (const ClimbState& c : candidates) {
      const double v = score(cam, box, c, target);
      if (v > best_score) {
        best_score = v;
        best_state = c;
      }
    }
    if (best_score > best) {
      state = best_state;
      state.alpha = wrap_angle(state.alpha);
      best = best_score;
    } else {
      // Stop once a step at or below the floor has failed both ways.
      if (angle_step <= options.min_step) {
        out.trace.push_back(best);
        break;
      }
      angle_step *= 0.5;
      depth_step *= 0.5;
    }
    out.trace.push_back(best);
  }
  out.state = state;
  out.iou = best;
  return out;
}

}  // namespace

HillClimbResult hillclimb_refine(const CameraModel& cam, const DetectionBox& box,
                                 const Box2D& target,
                                 const HillClimbOptions& options) {
  if (!target.valid()) throw InvalidArgument("hillclimb: target box has no area");
  if (!(box.center.z() > 0.0)) throw InvalidArgument("hillclimb: box depth must be positive");
  if (options.angle_seeds < 0) throw InvalidArgument("hillclimb: angle_seeds must be >= 0");
  const ClimbState start{obs_angle(box.center.x(), box.center.z(), box.yaw), 1.0};
  Climb best = climb(cam, box, start, target, options);

  HillClimbResult out;
  out.initial_iou = best.trace.front();
  out.iou_trace = best.trace;
  out.iterations = best.iterations;
  // Side-on views have secondary IoU peaks a few tenths of a radian from the
  // true one; restarts spread around the circle escape them. A restart has to
  // beat the incumbent by more than rounding noise to replace it.
  for (int k = 1; k < options.angle_seeds; ++k) {
    const ClimbState seed{wrap_angle(start.alpha + 2.0 * M_PI * k / options.angle_seeds), 1.0};
    const Climb c = climb(cam, box, seed, target, options);
    out.iterations += c.iterations;
    if (c.iou > best.iou + 1e-12) best = c;
    out.iou_trace.push_back(best.iou);
  }
  out.box = realize(box, best.state);
  out.iou = best.iou;
  return out;
}

}  // namespace geodepth
