#pragma once

#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "geodepth/anchors3d.hpp"
#include "geodepth/camgeo.hpp"
#include "geodepth/grid.hpp"

namespace geodepth {

/// |P| x |T| IoU matrix (row = prediction, column = annotation).
Eigen::MatrixXd iou_matrix(std::span<const Box2D> preds,
                           std::span<const Box2D> annots);

/// Minimum-cost one-to-one assignment of rows to columns of a rectangular
/// cost matrix; assigns min(rows, cols) pairs. Returns the column of each
/// row or -1. Among optimal assignments the lexicographically smallest
/// (row, column) sequence is chosen.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

struct MatchResult {
  std::vector<std::pair<int, int>> kept;      // (pred, annot), cost <= eps
  std::vector<std::pair<int, int>> rejected;  // matched but cost > eps
  std::vector<int> unmatched_annotations;
  std::vector<int> unmatched_predictions;
  double total_cost = 0.0;  // over all matched pairs
};

/// Hungarian matching on cost = 1 - IoU; pairs whose cost exceeds `eps`
/// are rejected as mis-detections.
MatchResult match_min_cost(const Eigen::MatrixXd& iou, double eps = 0.5);

struct Annotation2D {
  Box2D box;
  int category = 0;
};

struct PseudoLabelOptions {
  double eps = 0.5;
  int stride = 4;                 // heatmap downsampling factor
  double score_threshold = 0.05;  // predictions below are ignored
  double min_overlap = 0.7;       // Gaussian radius rule
};

/// Which output heads receive loss from pseudo labels.
struct SupervisionMask {
  bool heatmap = true;
  bool box2d = true;
  bool center3d = false;
  bool depth = false;
  bool dimensions = false;
  bool orientation = false;
};

struct PseudoLabelSet {
  std::vector<DetectionBox> labels;  // 3D from predictions, 2D from annotations
  std::vector<Eigen::Vector2i> peaks;  // heatmap cell of each label
  int matched = 0;
  int removed = 0;          // rejected as mis-detections
  int skipped_outside = 0;  // center projected outside the heatmap
  Grid<float> heatmap;      // H/stride x W/stride, values in [0, 1]
  // Per-cell 2D targets at peaks: distances from the peak to the box's
  // left, top, right and bottom edges (heatmap pixels) and the sub-cell
  // offset of the projected center.
  Grid<float> box_left, box_top, box_right, box_bottom;
  Grid<float> offset_x, offset_y;
  Mask target_mask;
  SupervisionMask supervision;
};

/// CenterNet-style Gaussian radius for a box of the given size (output
/// pixels) that keeps IoU >= min_overlap under corner jitter.
double gaussian_radius(double height, double width, double min_overlap = 0.7);

/// Max-composes a Gaussian of the given radius centered on `cell`.
void splat_gaussian(Grid<float>& heatmap, const Eigen::Vector2i& cell, int radius);

/// Pseudo 3D labels from 2D annotations: per-category matching against the
/// predictions, mis-detection removal, heatmap and 2D map reconstruction.
PseudoLabelSet build_pseudo_labels(std::span<const DetectionBox> predictions,
                                   std::span<const Annotation2D> annotations,
                                   const CameraModel& cam,
                                   const PseudoLabelOptions& options = {});

/// Size of the category registry (Car, Pedestrian, Cyclist, Van, Truck,
/// Person_sitting, Tram, Misc); valid ids are [0, kCategoryCount).
inline constexpr int kCategoryCount = 8;

/// Set of categories a dataset actually annotates.
class CategoryMask {
 public:
  explicit CategoryMask(std::set<int> annotated);
  const std::set<int>& annotated() const { return annotated_; }

 private:
  std::set<int> annotated_;
};

struct SelectiveMask {
  std::vector<int> categories;
  std::vector<bool> supervised;  // aligned with `categories`
  std::string warning;           // set when nothing is supervised
};

/// Supervision flag per requested category; loss from unannotated categories
/// must be zeroed. Throws InvalidArgument on ids outside the registry.
SelectiveMask selective_mask(const CategoryMask& dataset,
                             std::span<const int> all_categories);

}  // namespace geodepth
