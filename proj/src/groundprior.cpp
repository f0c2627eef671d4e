#include "geodepth/groundprior.hpp"

#include <algorithm>
#include <cmath>

#include "geodepth/errors.hpp"

namespace geodepth {
namespace {

double depth_numerator(const PinholeParams& p, const GroundConfig& cfg) {
  const double num = p.fy * cfg.elevation + cfg.ty;
  if (!(num > 0.0)) {
    throw InvalidConfig("ground prior: fy * elevation + ty must be positive");
  }
  return num;
}

}  // namespace

void GroundConfig::validate() const {
  if (!(elevation > 0.0) || !std::isfinite(elevation)) {
    throw InvalidConfig("ground prior: elevation must be positive");
  }
  if (!(baseline > 0.0) || !std::isfinite(baseline)) {
    throw InvalidConfig("ground prior: baseline must be positive");
  }
  if (!(object_height > 0.0) || !(object_height < 2.0 * elevation)) {
    throw InvalidConfig("ground prior: object height must lie in (0, 2 * elevation)");
  }
  if (!std::isfinite(ty)) throw InvalidConfig("ground prior: ty must be finite");
}

std::optional<double> ground_depth(const CameraModel& cam,
                                   const GroundConfig& cfg, double v) {
  const PinholeParams& p = cam.as_pinhole();
  cfg.validate();
  const double num = depth_numerator(p, cfg);
  if (!(v > p.cy)) return std::nullopt;
  return num / (v - p.cy);
}

double virtual_disparity(const CameraModel& cam, const GroundConfig& cfg,
                         double v) {
  const PinholeParams& p = cam.as_pinhole();
  cfg.validate();
  const double num = depth_numerator(p, cfg);
  return std::max(0.0, p.fy * cfg.baseline * (v - p.cy) / num);
}

double vertical_offset(const GroundConfig& cfg, const CameraModel& cam,
                       double v) {
  cfg.validate();
  const double cy = cam.principal_point().y();
  return cfg.object_height / (2.0 * cfg.elevation - cfg.object_height) *
         (v - cy);
}

PriorMap prior_map(const CameraModel& cam, const GroundConfig& cfg) {
  const PinholeParams& p = cam.as_pinhole();
  cfg.validate();
  const double num = depth_numerator(p, cfg);
  const int w = cam.width();
  const int h = cam.height();
  PriorMap out{Grid<double>(w, h, 0.0), Grid<double>(w, h, 0.0), Mask(w, h, 0)};
  // Every column of a row shares the same prior.
  for (int y = 0; y < h; ++y) {
    const double dv = y - p.cy;
    const double disparity = std::max(0.0, p.fy * cfg.baseline * dv / num);
    const bool valid = dv > 0.0;
    const double depth = valid ? num / dv : 0.0;
    for (int x = 0; x < w; ++x) {
      out.depth(x, y) = depth;
      out.disparity(x, y) = disparity;
      out.valid(x, y) = valid ? 1 : 0;
    }
  }
  return out;
}

}  // namespace geodepth
