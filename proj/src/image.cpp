#include "geodepth/image.hpp"

#include <cmath>

#include "geodepth/errors.hpp"

namespace geodepth {

Image::Image(int width, int height, int channels, ColorSpace space, float fill)
    : width_(width), height_(height), channels_(channels), space_(space) {
  if (width < 0 || height < 0) throw InvalidArgument("Image: negative size");
  if (channels != 1 && channels != 3) {
    throw InvalidArgument("Image: channel count must be 1 or 3");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

DepthMap::DepthMap(int width, int height, DepthKind kind)
    : depth_(width, height, 0.0), valid_(width, height, 0), kind_(kind) {}

void DepthMap::set(int x, int y, double value) {
  const bool ok = value > 0.0 && std::isfinite(value);
  depth_(x, y) = ok ? value : 0.0;
  valid_(x, y) = ok ? 1 : 0;
}

void DepthMap::invalidate(int x, int y) {
  depth_(x, y) = 0.0;
  valid_(x, y) = 0;
}

std::size_t DepthMap::valid_count() const {
  std::size_t n = 0;
  for (auto v : valid_.data()) n += v != 0;
  return n;
}

namespace {

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double kDelta = 6.0 / 29.0;
  return t > kDelta * kDelta * kDelta ? std::cbrt(t)
                                      : t / (3 * kDelta * kDelta) + 4.0 / 29.0;
}

void require_rgb(const Image& img, const char* what) {
  if (img.color_space() != ColorSpace::kRgb || img.channels() != 3) {
    throw InvalidArgument(std::string(what) + ": expected a 3-channel RGB image");
  }
}

}  // namespace

Image rgb_to_lab(const Image& rgb) {
  require_rgb(rgb, "rgb_to_lab");
  // D65 reference white.
  constexpr double kXn = 0.95047;
  constexpr double kYn = 1.0;
  constexpr double kZn = 1.08883;
  Image lab(rgb.width(), rgb.height(), 3, ColorSpace::kLab);
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      const double r = srgb_to_linear(rgb.at(x, y, 0));
      const double g = srgb_to_linear(rgb.at(x, y, 1));
      const double b = srgb_to_linear(rgb.at(x, y, 2));
      const double X = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
      const double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
      const double Z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
      const double fx = lab_f(X / kXn);
      const double fy = lab_f(Y / kYn);
      const double fz = lab_f(Z / kZn);
      lab.at(x, y, 0) = static_cast<float>(116.0 * fy - 16.0);
      lab.at(x, y, 1) = static_cast<float>(500.0 * (fx - fy));
      lab.at(x, y, 2) = static_cast<float>(200.0 * (fy - fz));
    }
  }
  return lab;
}

Image rgb_to_gray(const Image& rgb) {
  require_rgb(rgb, "rgb_to_gray");
  Image gray(rgb.width(), rgb.height(), 1, ColorSpace::kGray);
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      gray.at(x, y, 0) = 0.299f * rgb.at(x, y, 0) + 0.587f * rgb.at(x, y, 1) +
                         0.114f * rgb.at(x, y, 2);
    }
  }
  return gray;
}

}  // namespace geodepth
