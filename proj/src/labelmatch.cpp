#include "geodepth/labelmatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "geodepth/errors.hpp"

namespace geodepth {

Eigen::MatrixXd iou_matrix(std::span<const Box2D> preds,
                           std::span<const Box2D> annots) {
  Eigen::MatrixXd m(preds.size(), annots.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!preds[i].valid()) throw InvalidArgument("iou_matrix: prediction box has no area");
    for (std::size_t j = 0; j < annots.size(); ++j) {
      if (!annots[j].valid()) throw InvalidArgument("iou_matrix: annotation box has no area");
      m(i, j) = iou(preds[i], annots[j]);
    }
  }
  return m;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest-augmenting-path Hungarian with potentials; requires rows <= cols.
// Returns the column of every row.
std::vector<int> solve_rows_le_cols(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) assignment[p[j] - 1] = j - 1;
  }
  return assignment;
}

// Any optimal assignment (row -> col or -1) for a rectangular matrix.
std::vector<int> solve_any(const Eigen::MatrixXd& cost) {
  if (cost.rows() == 0 || cost.cols() == 0) {
    return std::vector<int>(cost.rows(), -1);
  }
  if (cost.rows() <= cost.cols()) return solve_rows_le_cols(cost);
  const std::vector<int> by_col = solve_rows_le_cols(cost.transpose());
  std::vector<int> by_row(cost.rows(), -1);
  for (int j = 0; j < static_cast<int>(by_col.size()); ++j) by_row[by_col[j]] = j;
  return by_row;
}

double assignment_cost(const Eigen::MatrixXd& cost, const std::vector<int>& a) {
  double total = 0.0;
  for (int i = 0; i < static_cast<int>(a.size()); ++i) {
    if (a[i] >= 0) total += cost(i, a[i]);
  }
  return total;
}

// Optimal cost of the sub-problem on the given rows/cols.
double optimum(const Eigen::MatrixXd& cost, const std::vector<int>& rows,
               const std::vector<int>& cols) {
  if (rows.empty() || cols.empty()) return 0.0;
  Eigen::MatrixXd sub(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) sub(i, j) = cost(rows[i], cols[j]);
  }
  return assignment_cost(sub, solve_any(sub));
}

}  // namespace

std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  if (!cost.allFinite()) throw InvalidArgument("hungarian: non-finite cost");
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  const int pairs = std::min(n, m);
  const double best = assignment_cost(cost, solve_any(cost));
  const double tol = 1e-9 * std::max(1.0, std::abs(best));

  // Fix rows in order to the smallest column that still admits an optimal
  // completion; this picks the lexicographically smallest optimum.
  std::vector<int> result(n, -1);
  std::vector<int> free_rows;
  std::vector<int> free_cols(m);
  for (int j = 0; j < m; ++j) free_cols[j] = j;
  double fixed_cost = 0.0;
  int fixed_pairs = 0;
  for (int i = 0; i < n; ++i) {
    std::vector<int> rest_rows;
    for (int r = i + 1; r < n; ++r) rest_rows.push_back(r);
    bool placed = false;
    for (std::size_t c = 0; c < free_cols.size() && fixed_pairs < pairs; ++c) {
      const int j = free_cols[c];
      std::vector<int> rest_cols = free_cols;
      rest_cols.erase(rest_cols.begin() + static_cast<std::ptrdiff_t>(c));
      // The remaining rows must still be able to fill the pair quota.
      const int remaining_pairs = std::min<int>(rest_rows.size(), rest_cols.size());
      if (fixed_pairs + 1 + remaining_pairs < pairs) continue;
      const double total =
          fixed_cost + cost(i, j) + optimum(cost, rest_rows, rest_cols);
      if (total <= best + tol) {
        result[i] = j;
        fixed_cost += cost(i, j);
        ++fixed_pairs;
        free_cols.erase(free_cols.begin() + static_cast<std::ptrdiff_t>(c));
        placed = true;
        break;
      }
    }
    (void)placed;  // leaving row i unmatched is always feasible when n > m
  }
  return result;
}

MatchResult match_min_cost(const Eigen::MatrixXd& iou, double eps) {
  if (!(eps > 0.0) || !(eps <= 1.0)) {
    throw InvalidArgument("match_min_cost: eps must lie in (0, 1]");
  }
  const Eigen::MatrixXd cost = Eigen::MatrixXd::Ones(iou.rows(), iou.cols()) - iou;
  const std::vector<int> assignment = hungarian(cost);
  MatchResult out;
  std::vector<char> annot_used(iou.cols(), 0);
  for (int i = 0; i < static_cast<int>(assignment.size()); ++i) {
    const int j = assignment[i];
    if (j < 0) {
      out.unmatched_predictions.push_back(i);
      continue;
    }
    annot_used[j] = 1;
    out.total_cost += cost(i, j);
    if (cost(i, j) > eps) {
      out.rejected.emplace_back(i, j);
    } else {
      out.kept.emplace_back(i, j);
    }
  }
  for (int j = 0; j < static_cast<int>(iou.cols()); ++j) {
    if (!annot_used[j]) out.unmatched_annotations.push_back(j);
  }
  return out;
}

double gaussian_radius(double height, double width, double min_overlap) {
  const double a1 = 1.0;
  const double b1 = height + width;
  const double c1 = width * height * (1 - min_overlap) / (1 + min_overlap);
  const double r1 = (b1 + std::sqrt(b1 * b1 - 4 * a1 * c1)) / 2;

  const double a2 = 4.0;
  const double b2 = 2 * (height + width);
  const double c2 = (1 - min_overlap) * width * height;
  const double r2 = (b2 + std::sqrt(b2 * b2 - 4 * a2 * c2)) / 2;

  const double a3 = 4 * min_overlap;
  const double b3 = -2 * min_overlap * (height + width);
  const double c3 = (min_overlap - 1) * width * height;
  const double r3 = (b3 + std::sqrt(b3 * b3 - 4 * a3 * c3)) / 2;
  return std::min({r1, r2, r3});
}

void splat_gaussian(Grid<float>& heatmap, const Eigen::Vector2i& cell, int radius) {
  radius = std::max(radius, 0);
  const double sigma = (2 * radius + 1) / 6.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const int x = cell.x() + dx;
      const int y = cell.y() + dy;
      if (!heatmap.contains(x, y)) continue;
      const float g =
          static_cast<float>(std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)));
      heatmap(x, y) = std::max(heatmap(x, y), g);
    }
  }
}

PseudoLabelSet build_pseudo_labels(std::span<const DetectionBox> predictions,
                                   std::span<const Annotation2D> annotations,
                                   const CameraModel& cam,
                                   const PseudoLabelOptions& options) {
  if (options.stride < 1) throw InvalidArgument("pseudo labels: stride must be >= 1");
  const PinholeParams& p = cam.as_pinhole();
  const int hw = std::max(1, cam.width() / options.stride);
  const int hh = std::max(1, cam.height() / options.stride);

  PseudoLabelSet out;
  out.heatmap = Grid<float>(hw, hh, 0.0f);
  for (Grid<float>* g : {&out.box_left, &out.box_top, &out.box_right, &out.box_bottom,
                         &out.offset_x, &out.offset_y}) {
    *g = Grid<float>(hw, hh, 0.0f);
  }
  out.target_mask = Mask(hw, hh, 0);

  std::map<int, std::pair<std::vector<int>, std::vector<int>>> by_category;
  for (int i = 0; i < static_cast<int>(predictions.size()); ++i) {
    if (predictions[i].score >= options.score_threshold) {
      by_category[predictions[i].category].first.push_back(i);
    }
  }
  for (int j = 0; j < static_cast<int>(annotations.size()); ++j) {
    by_category[annotations[j].category].second.push_back(j);
  }

  const double s = options.stride;
  for (const auto& [category, members] : by_category) {
    const auto& [pred_ids, annot_ids] = members;
    if (pred_ids.empty() || annot_ids.empty()) continue;
    std::vector<Box2D> pb, ab;
    for (int i : pred_ids) pb.push_back(predictions[i].box2d);
    for (int j : annot_ids) ab.push_back(annotations[j].box);
    const MatchResult match = match_min_cost(iou_matrix(pb, ab), options.eps);
    out.matched += static_cast<int>(match.kept.size() + match.rejected.size());
    out.removed += static_cast<int>(match.rejected.size());

    for (const auto& [pi, aj] : match.kept) {
      DetectionBox label = predictions[pred_ids[pi]];
      const Annotation2D& annot = annotations[annot_ids[aj]];
      label.box2d = annot.box;
      label.category = annot.category;
      if (!(label.center.z() > 0.0)) {
        ++out.skipped_outside;
        continue;
      }
      const double u = p.fx * label.center.x() / label.center.z() + p.cx;
      const double v = p.fy * label.center.y() / label.center.z() + p.cy;
      const double hu = u / s;
      const double hv = v / s;
      const int cx = static_cast<int>(std::floor(hu));
      const int cy = static_cast<int>(std::floor(hv));
      if (!out.heatmap.contains(cx, cy)) {
        ++out.skipped_outside;
        continue;
      }
      const double bw = annot.box.width() / s;
      const double bh = annot.box.height() / s;
      const int radius = static_cast<int>(gaussian_radius(bh, bw, options.min_overlap));
      splat_gaussian(out.heatmap, {cx, cy}, radius);
      out.box_left(cx, cy) = static_cast<float>(cx - annot.box.x1 / s);
      out.box_top(cx, cy) = static_cast<float>(cy - annot.box.y1 / s);
      out.box_right(cx, cy) = static_cast<float>(annot.box.x2 / s - cx);
      out.box_bottom(cx, cy) = static_cast<float>(annot.box.y2 / s - cy);
      out.offset_x(cx, cy) = static_cast<float>(hu - cx);
      out.offset_y(cx, cy) = static_cast<float>(hv - cy);
      out.target_mask(cx, cy) = 1;
      out.labels.push_back(label);
      out.peaks.emplace_back(cx, cy);
    }
  }
  return out;
}

CategoryMask::CategoryMask(std::set<int> annotated) : annotated_(std::move(annotated)) {
  if (annotated_.empty()) throw InvalidArgument("CategoryMask: no annotated categories");
}

SelectiveMask selective_mask(const CategoryMask& dataset,
                             std::span<const int> all_categories) {
  auto check = [](int c) {
    if (c < 0 || c >= kCategoryCount) {
      throw InvalidArgument("selective_mask: unknown category id " + std::to_string(c));
    }
  };
  for (int c : dataset.annotated()) check(c);
  for (int c : all_categories) check(c);
  SelectiveMask out;
  bool any = false;
  for (int c : all_categories) {
    const bool sup = dataset.annotated().count(c) > 0;
    out.categories.push_back(c);
    out.supervised.push_back(sup);
    any = any || sup;
  }
  if (!any) out.warning = "no requested category is annotated by this dataset";
  return out;
}

}  // namespace geodepth
