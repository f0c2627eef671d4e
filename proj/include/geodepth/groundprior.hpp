#pragma once

#include <optional>

#include "geodepth/camgeo.hpp"
#include "geodepth/grid.hpp"

namespace geodepth {

/// Flat-ground assumptions for a forward-looking pinhole camera.
struct GroundConfig {
  double elevation = 1.65;      // camera height above ground (m)
  double ty = 0.0;              // vertical translation term (m * px)
  double baseline = 0.54;       // virtual stereo baseline (m)
  // Nominal object height. 1.53 m is a placeholder, not a measured dataset
  // statistic; set it from the training labels.
  double object_height = 1.53;

  // Throws InvalidConfig when elevation or baseline is not positive or the
  // object height is outside (0, 2 * elevation).
  void validate() const;
};

/// Depth of the ground plane seen at pixel row v. Empty at or above the
/// horizon (v <= cy), where the ground is not visible.
std::optional<double> ground_depth(const CameraModel& cam,
                                   const GroundConfig& cfg, double v);

/// Ground depth re-encoded as the disparity of a virtual stereo rig,
/// d = fy * B * (v - cy) / (fy * EL + Ty), clamped at zero. Continuous
/// through the horizon.
double virtual_disparity(const CameraModel& cam, const GroundConfig& cfg,
                         double v);

/// Expected vertical pixel offset from an object's center to its ground
/// contact point, h / (2 EL - h) * (v - cy).
double vertical_offset(const GroundConfig& cfg, const CameraModel& cam,
                       double v);

struct PriorMap {
  Grid<double> depth;       // 0 where invalid
  Grid<double> disparity;   // defined everywhere, >= 0
  Mask valid;               // 1 where v > cy
};

PriorMap prior_map(const CameraModel& cam, const GroundConfig& cfg);

}  // namespace geodepth
