#pragma once

#include "geodepth/grid.hpp"

namespace geodepth {

/// Per-pixel displacement (dx, dy) in pixels from the base frame to the
/// other frame, with a validity mask.
struct FlowField {
  FlowField() = default;
  FlowField(int width, int height)
      : dx(width, height, 0.0f), dy(width, height, 0.0f), valid(width, height, 0) {}

  int width() const { return dx.width(); }
  int height() const { return dx.height(); }

  Grid<float> dx;
  Grid<float> dy;
  Mask valid;
};

}  // namespace geodepth
