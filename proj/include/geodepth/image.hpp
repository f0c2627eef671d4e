#pragma once

#include <cstddef>
#include <vector>

#include "geodepth/camgeo.hpp"
#include "geodepth/grid.hpp"

namespace geodepth {

enum class ColorSpace { kRgb, kLab, kGray };

/// H x W x C float image, channels interleaved. RGB and gray values live in
/// [0, 1]; LAB keeps its native ranges (L in [0, 100]).
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, ColorSpace space,
        float fill = 0.0f);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  ColorSpace color_space() const { return space_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * height_;
  }

  float& at(int x, int y, int c) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  float at(int x, int y, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  ColorSpace space_ = ColorSpace::kGray;
  std::vector<float> data_;
};

/// Dense metric depth with explicit validity. Valid entries are positive
/// and finite; invalid entries carry no meaning.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, DepthKind kind = DepthKind::kZ);

  int width() const { return depth_.width(); }
  int height() const { return depth_.height(); }
  DepthKind kind() const { return kind_; }
  void set_kind(DepthKind kind) { kind_ = kind; }

  bool valid(int x, int y) const { return valid_(x, y) != 0; }
  double depth(int x, int y) const { return depth_(x, y); }
  // Stores `value` and marks the pixel valid iff it is positive and finite.
  void set(int x, int y, double value);
  void invalidate(int x, int y);

  const Grid<double>& values() const { return depth_; }
  const Mask& validity() const { return valid_; }
  std::size_t valid_count() const;

  bool same_shape(const DepthMap& other) const {
    return width() == other.width() && height() == other.height();
  }

 private:
  Grid<double> depth_;
  Mask valid_;
  DepthKind kind_ = DepthKind::kZ;
};

// sRGB (gamma encoded, [0, 1]) to CIE LAB under D65.
Image rgb_to_lab(const Image& rgb);
Image rgb_to_gray(const Image& rgb);

}  // namespace geodepth
