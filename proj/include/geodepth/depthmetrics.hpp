#pragma once

#include <cstddef>

#include "geodepth/image.hpp"

namespace geodepth {

enum class ScaleMode { kNone, kMedian };

struct EvalOptions {
  ScaleMode scale = ScaleMode::kNone;
  double min_depth = 1e-3;  // m
  double max_depth = 80.0;  // m, KITTI-style cap
};

struct MetricReport {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;      // m
  double rmse_log = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  double silog = 0.0;     // mean(d^2) - mean(d)^2, d = log pred - log gt
  std::size_t valid_count = 0;
  double scale = 1.0;     // factor applied to pred before the metrics
};

/// Standard monocular depth metrics over pixels valid in both maps whose
/// ground truth lies inside [min_depth, max_depth]. With median scaling,
/// pred is multiplied by median(gt) / median(pred) first. Predictions are
/// then clamped to the caps. delta_n counts max(p/g, g/p) < 1.25^n strictly.
/// Throws EmptyOverlap when no pixel qualifies.
MetricReport evaluate(const DepthMap& pred, const DepthMap& gt,
                      const EvalOptions& options = {});

/// mean(d^2) - lambda * mean(d)^2 over the same pixel set, no scaling.
double silog_only(const DepthMap& pred, const DepthMap& gt, double lambda,
                  const EvalOptions& options = {});

}  // namespace geodepth
