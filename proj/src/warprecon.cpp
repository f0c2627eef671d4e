#include "geodepth/warprecon.hpp"

#include <algorithm>
#include <cmath>

#include "geodepth/errors.hpp"

namespace geodepth {
namespace {

constexpr double kSnap = 1e-9;

double snap(double c) {
  const double r = std::round(c);
  return std::abs(c - r) < kSnap ? r : c;
}

int reflect(int i, int n) {
  if (n == 1) return 0;
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

// Projects target pixel (x, y) into the source view. Returns nullopt when
// the depth is invalid or the point is not visible in the source camera.
std::optional<Eigen::Vector2d> reproject(const DepthMap& depth,
                                         const CameraModel& cam_target,
                                         const CameraModel& cam_source,
                                         const RigidPose& pose, int x, int y) {
  if (!depth.valid(x, y)) return std::nullopt;
  Eigen::Vector3d p;
  try {
    p = unproject(cam_target, Eigen::Vector2d(x, y), depth.depth(x, y),
                  depth.kind());
  } catch (const InvalidArgument&) {
    return std::nullopt;
  } catch (const NumericalError&) {
    return std::nullopt;
  }
  const Projection proj = project(cam_source, pose * p);
  if (proj.visible) return proj.pixel;
  if (!proj.defined) return std::nullopt;
  // Rounding can push a border pixel a hair outside the image; let it
  // through when it snaps back in.
  const Eigen::Vector2d snapped(snap(proj.pixel.x()), snap(proj.pixel.y()));
  const bool raw_out = proj.pixel.x() < 0.0 || proj.pixel.y() < 0.0 ||
                       proj.pixel.x() >= cam_source.width() ||
                       proj.pixel.y() >= cam_source.height();
  const bool snapped_in = snapped.x() >= 0.0 && snapped.y() >= 0.0 &&
                          snapped.x() <= cam_source.width() - 1 &&
                          snapped.y() <= cam_source.height() - 1;
  if (raw_out && snapped_in) return snapped;
  return std::nullopt;
}

void require_depth_matches(const DepthMap& depth, const CameraModel& cam) {
  if (depth.width() != cam.width() || depth.height() != cam.height()) {
    throw InvalidArgument("warp: depth map size does not match target camera");
  }
}

}  // namespace

bool sample_bilinear(const Image& img, double u, double v, float* out) {
  u = snap(u);
  v = snap(v);
  if (!(u >= 0.0) || !(v >= 0.0)) return false;
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const double fx = u - x0;
  const double fy = v - y0;
  const int x1 = fx > 0.0 ? x0 + 1 : x0;
  const int y1 = fy > 0.0 ? y0 + 1 : y0;
  if (x1 >= img.width() || y1 >= img.height()) return false;
  for (int c = 0; c < img.channels(); ++c) {
    const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
    const double bottom =
        (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
    out[c] = static_cast<float>((1.0 - fy) * top + fy * bottom);
  }
  return true;
}

WarpResult warp(const Image& source, const DepthMap& target_depth,
                const CameraModel& cam_target, const CameraModel& cam_source,
                const RigidPose& target_to_source) {
  require_depth_matches(target_depth, cam_target);
  if (source.width() != cam_source.width() ||
      source.height() != cam_source.height()) {
    throw InvalidArgument("warp: source image size does not match source camera");
  }
  const int w = target_depth.width();
  const int h = target_depth.height();
  WarpResult out{Image(w, h, source.channels(), source.color_space()),
                 Mask(w, h, 0)};
  float sample[3];
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto px =
          reproject(target_depth, cam_target, cam_source, target_to_source, x, y);
      if (!px || !sample_bilinear(source, px->x(), px->y(), sample)) continue;
      for (int c = 0; c < source.channels(); ++c) out.image.at(x, y, c) = sample[c];
      out.valid(x, y) = 1;
    }
  }
  return out;
}

WarpResult warp_with_flow(const Image& source, const FlowField& flow) {
  if (flow.width() != source.width() || flow.height() != source.height()) {
    throw InvalidArgument("warp_with_flow: flow and image sizes differ");
  }
  const int w = source.width();
  const int h = source.height();
  WarpResult out{Image(w, h, source.channels(), source.color_space()),
                 Mask(w, h, 0)};
  float sample[3];
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!flow.valid(x, y)) continue;
      // Flow is stored in f32; add in double so the sample point matches
      // a direct reprojection as closely as the storage allows.
      const double u = x + static_cast<double>(flow.dx(x, y));
      const double v = y + static_cast<double>(flow.dy(x, y));
      if (!sample_bilinear(source, u, v, sample)) continue;
      for (int c = 0; c < source.channels(); ++c) out.image.at(x, y, c) = sample[c];
      out.valid(x, y) = 1;
    }
  }
  return out;
}

FlowField synth_static_flow(const DepthMap& target_depth,
                            const CameraModel& cam_target,
                            const CameraModel& cam_source,
                            const RigidPose& target_to_source) {
  require_depth_matches(target_depth, cam_target);
  const int w = target_depth.width();
  const int h = target_depth.height();
  FlowField flow(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto px =
          reproject(target_depth, cam_target, cam_source, target_to_source, x, y);
      if (!px) continue;
      flow.dx(x, y) = static_cast<float>(px->x() - x);
      flow.dy(x, y) = static_cast<float>(px->y() - y);
      flow.valid(x, y) = 1;
    }
  }
  return flow;
}

PhotometricLoss photometric_loss(const Image& a, const Image& b,
                                 const PhotometricOptions& options,
                                 const Mask* valid) {
  if (!a.same_shape(b)) throw InvalidArgument("photometric_loss: shape mismatch");
  if (valid && (valid->width() != a.width() || valid->height() != a.height())) {
    throw InvalidArgument("photometric_loss: mask shape mismatch");
  }
  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  const int w = a.width();
  const int h = a.height();
  const int channels = a.channels();
  PhotometricLoss out{Grid<double>(w, h, 0.0), 0.0, 0};
  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (valid && !(*valid)(x, y)) continue;
      double ssim_term = 0.0;
      double l1 = 0.0;
      for (int c = 0; c < channels; ++c) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = reflect(y + dy, h);
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = reflect(x + dx, w);
            const double va = a.at(xx, yy, c);
            const double vb = b.at(xx, yy, c);
            sa += va;
            sb += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
          }
        }
        const double mu_a = sa / 9.0;
        const double mu_b = sb / 9.0;
        const double var_a = saa / 9.0 - mu_a * mu_a;
        const double var_b = sbb / 9.0 - mu_b * mu_b;
        const double cov = sab / 9.0 - mu_a * mu_b;
        const double num = (2 * mu_a * mu_b + kC1) * (2 * cov + kC2);
        const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
        ssim_term += std::clamp((1.0 - num / den) / 2.0, 0.0, 1.0);
        l1 += std::abs(static_cast<double>(a.at(x, y, c)) - b.at(x, y, c));
      }
      const double loss =
          options.alpha * ssim_term / channels + options.beta * l1 / channels;
      out.per_pixel(x, y) = loss;
      total += loss;
      ++out.count;
    }
  }
  out.mean = out.count ? total / static_cast<double>(out.count) : 0.0;
  return out;
}

double smoothness_loss(const DepthMap& depth, const Image& image) {
  if (depth.width() != image.width() || depth.height() != image.height()) {
    throw InvalidArgument("smoothness_loss: depth and image sizes differ");
  }
  const int w = depth.width();
  const int h = depth.height();
  const int channels = image.channels();
  auto grad_weight = [&](int x0, int y0, int x1, int y1) {
    double g = 0.0;
    for (int c = 0; c < channels; ++c) {
      g += std::abs(static_cast<double>(image.at(x1, y1, c)) - image.at(x0, y0, c));
    }
    return std::exp(-g / channels);
  };
  double sum = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!depth.valid(x, y)) continue;
      if (x + 1 < w && depth.valid(x + 1, y)) {
        sum += std::abs(depth.depth(x + 1, y) - depth.depth(x, y)) *
               grad_weight(x, y, x + 1, y);
      }
      if (y + 1 < h && depth.valid(x, y + 1)) {
        sum += std::abs(depth.depth(x, y + 1) - depth.depth(x, y)) *
               grad_weight(x, y, x, y + 1);
      }
    }
  }
  return sum / (static_cast<double>(w) * h);
}

SiLosses si_losses(const DepthMap& pred, const DepthMap& gt, const Image& image,
                   const SiLossOptions& options) {
  if (!pred.same_shape(gt)) throw InvalidArgument("si_losses: shape mismatch");
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) {
      if (!pred.valid(x, y) || !gt.valid(x, y)) continue;
      const double d = std::log(pred.depth(x, y)) - std::log(gt.depth(x, y));
      sum += d;
      sum_sq += d * d;
      ++n;
    }
  }
  if (n == 0) throw EmptyOverlap("si_losses: no pixel is valid in both maps");
  SiLosses out;
  const double nn = static_cast<double>(n);
  out.si = sum_sq / nn - options.lambda * (sum / nn) * (sum / nn);
  out.smooth = smoothness_loss(pred, image);
  out.total = out.si + options.alpha_smooth * out.smooth;
  out.valid_count = n;
  return out;
}

}  // namespace geodepth
