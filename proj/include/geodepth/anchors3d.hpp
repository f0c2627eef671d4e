#pragma once

#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "geodepth/camgeo.hpp"

namespace geodepth {

/// Axis-aligned 2D box in pixels, corners (x1, y1) top-left and (x2, y2)
/// bottom-right.
struct Box2D {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  static Box2D from_center(double cx, double cy, double w, double h) {
    return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
  }
  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  Eigen::Vector2d center() const { return {(x1 + x2) / 2, (y1 + y2) / 2}; }
  bool valid() const { return x2 > x1 && y2 > y1; }
};

double iou(const Box2D& a, const Box2D& b);

/// One object: 2D box plus a 3D box in the camera frame (x right, y down,
/// z forward). `center` is the 3D box center, `dims` = (w, h, l), `yaw` is
/// the rotation about the camera y axis and `alpha` the observation angle.
struct DetectionBox {
  Box2D box2d;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d dims = Eigen::Vector3d::Ones();
  double yaw = 0.0;
  double alpha = 0.0;
  double score = 1.0;
  int category = 0;
};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// alpha = yaw - atan2(x, z), wrapped.
double obs_angle(double x, double z, double yaw);
/// yaw = alpha + atan2(x, z), wrapped.
double yaw_from_obs(double alpha, double x, double z);

/// (sin 2a, cos 2a) encoding, which cannot tell a from a + pi.
Eigen::Vector2d encode_double_angle(double a);
/// Inverse of encode_double_angle, returning the representative in
/// (-pi/2, pi/2].
double decode_double_angle(const Eigen::Vector2d& enc);

struct AnchorPrior {
  double mean_z = 0.0;
  double var_z = 0.0;
  double mean_sin_alpha = 0.0;
  double var_sin_alpha = 0.0;
  double mean_cos_alpha = 0.0;
  double var_cos_alpha = 0.0;
  int matches = 0;
  bool flagged = true;  // no matching label; the statistics are meaningless
};

struct AnchorTemplate {
  Box2D box;
  int category = -1;  // -1 accepts labels of every category
  AnchorPrior prior;
};

struct DimensionPrior {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();  // (w, h, l)
  int count = 0;
};

/// Fills each template's prior from the labels whose 2D IoU with it is at
/// least `iou_threshold`. Population variances.
std::vector<AnchorTemplate> collect_anchor_stats(
    std::span<const AnchorTemplate> templates,
    std::span<const DetectionBox> labels, double iou_threshold = 0.5);

/// Mean 3D dimensions per category.
std::map<int, DimensionPrior> dimension_priors(std::span<const DetectionBox> labels);

/// (x, y) of the 3D point at depth z_hat behind pixel (u, v).
Eigen::Vector2d backproject_anchor(const CameraModel& cam, double u, double v,
                                   double z_hat);

struct GroundFilterOptions {
  double elevation = 1.65;  // ground plane is y = elevation in the camera frame
  double tolerance = 1.0;   // m
  // Per-category tolerance overrides.
  std::map<int, double> category_tolerance;
};

struct GroundFilterResult {
  std::vector<int> kept;
  std::vector<int> dropped;
};

/// Keeps templates whose center, back-projected at its prior mean depth,
/// lies within tolerance of the ground height. Flagged templates are
/// dropped.
GroundFilterResult filter_ground(std::span<const AnchorTemplate> templates,
                                 const CameraModel& cam,
                                 const GroundFilterOptions& options = {});

/// Eight corners of the 3D box in the camera frame.
std::array<Eigen::Vector3d, 8> box_corners(const DetectionBox& box);

/// Tight 2D box around the projected corners, clipped to the image. Throws
/// BehindCamera when a corner has z <= 0.
Box2D project_box3d(const CameraModel& cam, const DetectionBox& box);

enum class HillClimbMode { kAlphaOnly, kAlphaAndDepth };

struct HillClimbOptions {
  HillClimbMode mode = HillClimbMode::kAlphaOnly;
  double initial_angle_step = 0.1;  // rad
  double initial_depth_step = 0.05; // fraction of z
  double min_step = 1e-3;           // rad; depth steps scale alongside
  int max_iterations = 100;         // per climb
  int angle_seeds = 32;             // evenly spaced restarts in alpha; <= 1 climbs once
};

struct HillClimbResult {
  DetectionBox box;
  double iou = 0.0;
  double initial_iou = 0.0;
  int iterations = 0;
  std::vector<double> iou_trace;
};

/// Coordinate ascent on IoU(project_box3d(box), target) over the
/// observation angle (and optionally depth along the viewing ray), with
/// step halving. Candidates that put a corner behind the camera are
/// skipped.
HillClimbResult hillclimb_refine(const CameraModel& cam, const DetectionBox& box,
                                 const Box2D& target,
                                 const HillClimbOptions& options = {});

}  // namespace geodepth
