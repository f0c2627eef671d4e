#pragma once

#include <optional>

#include "geodepth/camgeo.hpp"
#include "geodepth/flow.hpp"
#include "geodepth/image.hpp"

namespace geodepth {

struct WarpResult {
  Image image;
  Mask valid;
};

/// Bilinear sample of every channel at continuous pixel (u, v). Returns
/// false (and leaves `out` untouched) when any of the four taps with
/// non-zero weight falls outside the image; there is no border clamping.
/// Coordinates within 1e-9 of an integer snap to it.
bool sample_bilinear(const Image& img, double u, double v, float* out);

/// Inverse warp: every target pixel with valid depth is lifted with
/// `cam_target`, moved by `target_to_source`, projected with `cam_source`
/// and filled with the bilinearly sampled source color.
WarpResult warp(const Image& source, const DepthMap& target_depth,
                const CameraModel& cam_target, const CameraModel& cam_source,
                const RigidPose& target_to_source);

/// Samples `source` at p + flow(p) for every valid flow vector.
WarpResult warp_with_flow(const Image& source, const FlowField& flow);

/// Flow induced on a static scene by the camera motion alone.
FlowField synth_static_flow(const DepthMap& target_depth,
                            const CameraModel& cam_target,
                            const CameraModel& cam_source,
                            const RigidPose& target_to_source);

struct PhotometricOptions {
  double alpha = 0.85;  // SSIM weight
  double beta = 0.15;   // L1 weight
};

struct PhotometricLoss {
  Grid<double> per_pixel;  // 0 outside the evaluated region
  double mean = 0.0;
  std::size_t count = 0;
};

/// 3x3 SSIM (reflect-padded, C1 = 0.01^2, C2 = 0.03^2) combined with L1:
/// alpha * (1 - SSIM) / 2 + beta * |a - b|, both averaged over channels.
/// `valid` restricts the mean; pass nullptr to use every pixel.
PhotometricLoss photometric_loss(const Image& a, const Image& b,
                                 const PhotometricOptions& options = {},
                                 const Mask* valid = nullptr);

struct SiLossOptions {
  double lambda = 0.3;        // weight of the squared-mean term
  double alpha_smooth = 0.3;  // weight of the smoothness term in `total`
};

struct SiLosses {
  double si = 0.0;
  double smooth = 0.0;
  double total = 0.0;  // si + alpha_smooth * smooth
  std::size_t valid_count = 0;
};

/// Scale-invariant log loss on pixels valid in both maps, plus single-scale
/// edge-aware smoothness of `pred` guided by `image`.
SiLosses si_losses(const DepthMap& pred, const DepthMap& gt, const Image& image,
                   const SiLossOptions& options = {});

/// Edge-aware smoothness alone: mean over all pixels of
/// |dz/dx| exp(-|dI/dx|) + |dz/dy| exp(-|dI/dy|), forward differences,
/// image gradient magnitude averaged over channels.
double smoothness_loss(const DepthMap& depth, const Image& image);

}  // namespace geodepth
