#pragma once

#include <span>
#include <vector>

namespace geodepth {

/// Proportional (geometric) depth bins spanning [d_min, d_max], defined for
/// a reference focal length f_base.
struct BinSpec {
  double d_min = 0.1;
  double d_max = 100.0;
  int count = 64;
  double f_base = 1266.0;

  void validate() const;
};

/// Bin centers d_i = d_min * (d_max / d_min)^(i / (N - 1)), both endpoints
/// included, each scaled by fx / f_base.
std::vector<double> bin_centers(const BinSpec& spec, double fx);

/// Softmax-weighted mean of the bin centers for one pixel's logits.
double decode_bins(const BinSpec& spec, double fx, std::span<const float> logits);
double decode_bins(std::span<const double> centers, std::span<const float> logits);

/// Limit of the mean bin depth as N grows:
/// (d_max - d_min) / (ln d_max - ln d_min).
double initial_mean(const BinSpec& spec);

/// Arithmetic mean of the (unscaled) bin centers at the spec's bin count.
double empirical_bin_mean(const BinSpec& spec);

/// Inverse-depth sigmoid decode: 1/d = 1/d_max + sigmoid(x) (1/d_min - 1/d_max).
double sigmoid_decode_baseline(double x, double d_min, double d_max);

/// Camera-aware decode z = (1 / sigmoid(z_o) - 1) * fx / fx0, capped at
/// `d_max_global`.
double camera_aware_z(double z_o, double fx, double fx0,
                      double d_max_global = 100.0);

/// Negative Laplacian log-likelihood of log(d) around log(d_pseudo):
/// |log d - log d_pseudo| / sigma + log sigma.
double distill_nll(double d, double d_pseudo, double sigma);
double distill_nll_log_sigma(double d, double d_pseudo, double log_sigma);

}  // namespace geodepth
