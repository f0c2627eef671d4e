#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "geodepth/grid.hpp"
#include "geodepth/image.hpp"

namespace geodepth {

struct SlicParams {
  int step = 16;               // seed grid spacing (px)
  double lambda_lab = 1.0;     // per LAB unit
  double lambda_depth = 0.5;   // per meter
  double lambda_pix = 0.5 / 16;  // per pixel
  int iterations = 10;

  void validate() const;
};

struct ClusterCenter {
  Eigen::Vector3d lab = Eigen::Vector3d::Zero();
  Eigen::Vector2d xy = Eigen::Vector2d::Zero();
  double depth = 0.0;
  bool has_depth = false;  // false when no member has a valid depth
};

struct Segmentation {
  Grid<std::int32_t> labels;           // dense ids in [0, K)
  std::vector<ClusterCenter> centers;  // member means of the final labels
  std::vector<int> counts;
  // Total assignment cost after each iteration's center update.
  std::vector<double> objective_trace;

  int cluster_count() const { return static_cast<int>(centers.size()); }
};

/// Seeds at the centers of a floor(W / s) x floor(H / s) tiling.
std::vector<Eigen::Vector2d> grid_seeds(int width, int height, int step);

/// Weighted feature distance lambda_lab |dLAB| + lambda_depth |dd| +
/// lambda_pix |dX|. The depth term is skipped when either side lacks depth.
double slic_distance(const SlicParams& params, const ClusterCenter& center,
                     const Eigen::Vector3d& lab, const Eigen::Vector2d& xy,
                     double depth, bool has_depth);

/// Depth-augmented SLIC on a LAB image. Each pixel is compared against the
/// centers within 2 * step of it (and always its current center).
Segmentation slic3d(const Image& lab, const DepthMap& depth,
                    const SlicParams& params);

/// Same, with caller-provided seed positions. Distance ties go to the
/// center whose seed comes first in (y, x) order, so the partition does not
/// depend on the order of `seeds`.
Segmentation slic3d(const Image& lab, const DepthMap& depth,
                    const SlicParams& params,
                    std::span<const Eigen::Vector2d> seeds);

/// Total cost sum_i L(center(label_i), f_i) for a labeling and center set.
double slic_objective(const Image& lab, const DepthMap& depth,
                      const SlicParams& params, const Grid<std::int32_t>& labels,
                      std::span<const ClusterCenter> centers);

struct SegmentStats {
  std::vector<double> mean_log_depth;  // 0 for flagged segments
  std::vector<int> valid_count;
  std::vector<std::uint8_t> flagged;   // 1 when a segment has no valid depth
  std::vector<std::vector<int>> members;  // linear pixel indices
};

SegmentStats segment_stats(const Segmentation& seg, const DepthMap& depth);

/// 1 on pixels whose right or lower neighbor belongs to another segment.
Mask segment_boundaries(const Grid<std::int32_t>& labels);

}  // namespace geodepth
