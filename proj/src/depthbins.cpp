#include "geodepth/depthbins.hpp"

#include <algorithm>
#include <cmath>

#include "geodepth/errors.hpp"

namespace geodepth {

void BinSpec::validate() const {
  if (!(d_min > 0.0) || !(d_max > d_min) || !std::isfinite(d_max)) {
    throw InvalidArgument("bins: require 0 < d_min < d_max");
  }
  if (count < 2) throw InvalidArgument("bins: need at least two bins");
  if (!(f_base > 0.0)) throw InvalidArgument("bins: f_base must be positive");
}

std::vector<double> bin_centers(const BinSpec& spec, double fx) {
  spec.validate();
  if (!(fx > 0.0)) throw InvalidArgument("bins: fx must be positive");
  const double scale = fx / spec.f_base;
  const double log_ratio = std::log(spec.d_max / spec.d_min);
  std::vector<double> centers(spec.count);
  for (int i = 0; i < spec.count; ++i) {
    const double t = static_cast<double>(i) / (spec.count - 1);
    centers[i] = spec.d_min * std::exp(t * log_ratio) * scale;
  }
  // Pin the endpoints so exp/log rounding cannot push them off the bounds.
  centers.front() = spec.d_min * scale;
  centers.back() = spec.d_max * scale;
  return centers;
}

double decode_bins(std::span<const double> centers,
                   std::span<const float> logits) {
  if (centers.size() != logits.size() || centers.empty()) {
    throw InvalidArgument("bins: logits length does not match bin count");
  }
  double peak = -INFINITY;
  for (float l : logits) {
    if (!std::isfinite(l)) throw InvalidArgument("bins: non-finite logit");
    peak = std::max(peak, static_cast<double>(l));
  }
  double weight_sum = 0.0;
  double depth_sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double w = std::exp(static_cast<double>(logits[i]) - peak);
    weight_sum += w;
    depth_sum += w * centers[i];
  }
  const double d = depth_sum / weight_sum;
  return std::clamp(d, centers.front(), centers.back());
}

double decode_bins(const BinSpec& spec, double fx,
                   std::span<const float> logits) {
  const std::vector<double> centers = bin_centers(spec, fx);
  return decode_bins(centers, logits);
}

double initial_mean(const BinSpec& spec) {
  if (!(spec.d_min > 0.0) || !(spec.d_max >= spec.d_min)) {
    throw InvalidArgument("bins: require 0 < d_min <= d_max");
  }
  // d_min * x / log1p(x) with x = d_max / d_min - 1 stays accurate as the
  // interval collapses; the limit there is d_min.
  const double x = (spec.d_max - spec.d_min) / spec.d_min;
  if (x < 1e-8) return spec.d_min * (1.0 + 0.5 * x);
  return spec.d_min * x / std::log1p(x);
}

double empirical_bin_mean(const BinSpec& spec) {
  const std::vector<double> centers = bin_centers(spec, spec.f_base);
  double sum = 0.0;
  for (double c : centers) sum += c;
  return sum / static_cast<double>(centers.size());
}

double sigmoid_decode_baseline(double x, double d_min, double d_max) {
  if (!std::isfinite(x)) throw InvalidArgument("bins: non-finite input");
  if (!(d_min > 0.0) || !(d_max > d_min)) {
    throw InvalidArgument("bins: require 0 < d_min < d_max");
  }
  const double s = 1.0 / (1.0 + std::exp(-x));
  const double inv = 1.0 / d_max + s * (1.0 / d_min - 1.0 / d_max);
  return 1.0 / inv;
}

double camera_aware_z(double z_o, double fx, double fx0, double d_max_global) {
  if (!(fx > 0.0) || !(fx0 > 0.0)) {
    throw InvalidArgument("camera_aware_z: focal lengths must be positive");
  }
  if (std::isnan(z_o)) throw InvalidArgument("camera_aware_z: NaN input");
  // 1/sigmoid(z) - 1 == exp(-z)
  const double z = std::exp(-z_o) * (fx / fx0);
  return std::min(z, d_max_global);
}

double distill_nll_log_sigma(double d, double d_pseudo, double log_sigma) {
  if (!(d > 0.0) || !(d_pseudo > 0.0)) {
    throw InvalidArgument("distill_nll: depths must be positive");
  }
  if (!std::isfinite(log_sigma)) {
    throw InvalidArgument("distill_nll: log sigma must be finite");
  }
  return std::abs(std::log(d) - std::log(d_pseudo)) * std::exp(-log_sigma) +
         log_sigma;
}

double distill_nll(double d, double d_pseudo, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("distill_nll: sigma must be positive");
  return distill_nll_log_sigma(d, d_pseudo, std::log(sigma));
}

}  // namespace geodepth
