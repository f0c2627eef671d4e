#include "geodepth/slic3d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "geodepth/errors.hpp"

namespace geodepth {
namespace {

struct PixelFeatures {
  Eigen::Vector3d lab;
  double depth;
  bool has_depth;
};

PixelFeatures features_at(const Image& lab, const DepthMap& depth, int x, int y) {
  return {Eigen::Vector3d(lab.at(x, y, 0), lab.at(x, y, 1), lab.at(x, y, 2)),
          depth.depth(x, y), depth.valid(x, y)};
}

struct Accumulator {
  Eigen::Vector3d lab = Eigen::Vector3d::Zero();
  Eigen::Vector2d xy = Eigen::Vector2d::Zero();
  double depth = 0.0;
  int depth_count = 0;
  int count = 0;
};

std::vector<Accumulator> accumulate(const Image& lab, const DepthMap& depth,
                                    const Grid<std::int32_t>& labels, int k) {
  std::vector<Accumulator> acc(k);
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) {
      Accumulator& a = acc[labels(x, y)];
      a.lab += Eigen::Vector3d(lab.at(x, y, 0), lab.at(x, y, 1), lab.at(x, y, 2));
      a.xy += Eigen::Vector2d(x, y);
      if (depth.valid(x, y)) {
        a.depth += depth.depth(x, y);
        ++a.depth_count;
      }
      ++a.count;
    }
  }
  return acc;
}

ClusterCenter mean_center(const Accumulator& a) {
  ClusterCenter c;
  c.lab = a.lab / a.count;
  c.xy = a.xy / a.count;
  c.has_depth = a.depth_count > 0;
  c.depth = c.has_depth ? a.depth / a.depth_count : 0.0;
  return c;
}

}  // namespace

void SlicParams::validate() const {
  if (step < 2) throw InvalidArgument("slic: grid step must be at least 2");
  if (lambda_lab < 0 || lambda_depth < 0 || lambda_pix < 0) {
    throw InvalidArgument("slic: weights must be non-negative");
  }
  if (lambda_lab + lambda_depth + lambda_pix <= 0) {
    throw InvalidArgument("slic: at least one weight must be positive");
  }
  if (iterations < 1) throw InvalidArgument("slic: need at least one iteration");
}

std::vector<Eigen::Vector2d> grid_seeds(int width, int height, int step) {
  const int nx = width / step;
  const int ny = height / step;
  if (nx < 1 || ny < 1) {
    throw InvalidArgument("slic: image is smaller than one grid step, no clusters");
  }
  const double tile_w = static_cast<double>(width) / nx;
  const double tile_h = static_cast<double>(height) / ny;
  std::vector<Eigen::Vector2d> seeds;
  seeds.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      seeds.emplace_back((i + 0.5) * tile_w - 0.5, (j + 0.5) * tile_h - 0.5);
    }
  }
  return seeds;
}

double slic_distance(const SlicParams& params, const ClusterCenter& center,
                     const Eigen::Vector3d& lab, const Eigen::Vector2d& xy,
                     double depth, bool has_depth) {
  double d = params.lambda_lab * (center.lab - lab).norm() +
             params.lambda_pix * (center.xy - xy).norm();
  if (has_depth && center.has_depth) {
    d += params.lambda_depth * std::abs(center.depth - depth);
  }
  return d;
}

double slic_objective(const Image& lab, const DepthMap& depth,
                      const SlicParams& params, const Grid<std::int32_t>& labels,
                      std::span<const ClusterCenter> centers) {
  double total = 0.0;
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) {
      const PixelFeatures f = features_at(lab, depth, x, y);
      total += slic_distance(params, centers[labels(x, y)], f.lab,
                             Eigen::Vector2d(x, y), f.depth, f.has_depth);
    }
  }
  return total;
}

Segmentation slic3d(const Image& lab, const DepthMap& depth,
                    const SlicParams& params) {
  params.validate();
  const std::vector<Eigen::Vector2d> seeds =
      grid_seeds(lab.width(), lab.height(), params.step);
  return slic3d(lab, depth, params, seeds);
}

Segmentation slic3d(const Image& lab, const DepthMap& depth,
                    const SlicParams& params,
                    std::span<const Eigen::Vector2d> seeds) {
  params.validate();
  if (lab.channels() != 3) throw InvalidArgument("slic: expected a 3-channel LAB image");
  if (lab.width() != depth.width() || lab.height() != depth.height()) {
    throw InvalidArgument("slic: image and depth shapes differ");
  }
  if (seeds.empty()) throw InvalidArgument("slic: no seeds, zero clusters");
  const int w = lab.width();
  const int h = lab.height();
  const double radius = 2.0 * params.step;

  std::vector<ClusterCenter> centers;
  centers.reserve(seeds.size());
  for (const Eigen::Vector2d& s : seeds) {
    const int x = std::clamp(static_cast<int>(std::lround(s.x())), 0, w - 1);
    const int y = std::clamp(static_cast<int>(std::lround(s.y())), 0, h - 1);
    const PixelFeatures f = features_at(lab, depth, x, y);
    centers.push_back({f.lab, s, f.depth, f.has_depth});
  }
  // Tie-break rank: seed position in (y, x) order.
  std::vector<int> rank(seeds.size());
  {
    std::vector<int> order(seeds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (seeds[a].y() != seeds[b].y()) return seeds[a].y() < seeds[b].y();
      return seeds[a].x() < seeds[b].x();
    });
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i);
  }

  Segmentation seg;
  seg.labels = Grid<std::int32_t>(w, h, -1);
  Grid<double> best(w, h);

  auto better = [&](double d, int k, double best_d, int best_k) {
    return d < best_d || (d == best_d && best_k >= 0 && rank[k] < rank[best_k]);
  };

  for (int iter = 0; iter < params.iterations; ++iter) {
    // Assignment: start from the current center so a pixel never moves to
    // a worse one, then scan the centers whose window covers it.
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int cur = seg.labels(x, y);
        if (cur < 0) {
          best(x, y) = std::numeric_limits<double>::infinity();
          continue;
        }
        const PixelFeatures f = features_at(lab, depth, x, y);
        best(x, y) = slic_distance(params, centers[cur], f.lab,
                                   Eigen::Vector2d(x, y), f.depth, f.has_depth);
      }
    }
    for (int k = 0; k < static_cast<int>(centers.size()); ++k) {
      const ClusterCenter& c = centers[k];
      const int x0 = std::max(0, static_cast<int>(std::ceil(c.xy.x() - radius)));
      const int x1 = std::min(w - 1, static_cast<int>(std::floor(c.xy.x() + radius)));
      const int y0 = std::max(0, static_cast<int>(std::ceil(c.xy.y() - radius)));
      const int y1 = std::min(h - 1, static_cast<int>(std::floor(c.xy.y() + radius)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const PixelFeatures f = features_at(lab, depth, x, y);
          const double d = slic_distance(params, c, f.lab, Eigen::Vector2d(x, y),
                                         f.depth, f.has_depth);
          if (better(d, k, best(x, y), seg.labels(x, y))) {
            best(x, y) = d;
            seg.labels(x, y) = k;
          }
        }
      }
    }
    // Pixels no window reached (only possible with sparse custom seeds).
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (seg.labels(x, y) >= 0) continue;
        const PixelFeatures f = features_at(lab, depth, x, y);
        for (int k = 0; k < static_cast<int>(centers.size()); ++k) {
          const double d = slic_distance(params, centers[k], f.lab,
                                         Eigen::Vector2d(x, y), f.depth, f.has_depth);
          if (seg.labels(x, y) < 0 || better(d, k, best(x, y), seg.labels(x, y))) {
            best(x, y) = d;
            seg.labels(x, y) = k;
          }
        }
      }
    }

    // Update. The mean does not minimize a sum of (unsquared) norms, so a
    // cluster keeps its previous center when the mean would cost more.
    const int k_count = static_cast<int>(centers.size());
    const std::vector<Accumulator> acc = accumulate(lab, depth, seg.labels, k_count);
    std::vector<ClusterCenter> candidate(k_count);
    for (int k = 0; k < k_count; ++k) {
      if (acc[k].count > 0) candidate[k] = mean_center(acc[k]);
    }
    std::vector<double> cost_old(k_count, 0.0);
    std::vector<double> cost_new(k_count, 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int k = seg.labels(x, y);
        const PixelFeatures f = features_at(lab, depth, x, y);
        const Eigen::Vector2d xy(x, y);
        cost_old[k] += best(x, y);
        cost_new[k] += slic_distance(params, candidate[k], f.lab, xy, f.depth,
                                     f.has_depth);
      }
    }
    // Drop empty clusters and compact ids, keeping relative order.
    std::vector<int> remap(k_count, -1);
    std::vector<ClusterCenter> next;
    std::vector<int> next_rank;
    for (int k = 0; k < k_count; ++k) {
      if (acc[k].count == 0) continue;
      remap[k] = static_cast<int>(next.size());
      next.push_back(cost_new[k] <= cost_old[k] ? candidate[k] : centers[k]);
      next_rank.push_back(rank[k]);
    }
    for (auto& l : seg.labels.data()) l = remap[l];
    centers = std::move(next);
    rank = std::move(next_rank);
    seg.objective_trace.push_back(
        slic_objective(lab, depth, params, seg.labels, centers));
  }

  const int k_count = static_cast<int>(centers.size());
  const std::vector<Accumulator> acc = accumulate(lab, depth, seg.labels, k_count);
  seg.centers.resize(k_count);
  seg.counts.resize(k_count);
  for (int k = 0; k < k_count; ++k) {
    seg.centers[k] = mean_center(acc[k]);
    seg.counts[k] = acc[k].count;
  }
  return seg;
}

SegmentStats segment_stats(const Segmentation& seg, const DepthMap& depth) {
  if (seg.labels.width() != depth.width() || seg.labels.height() != depth.height()) {
    throw InvalidArgument("segment_stats: segmentation and depth shapes differ");
  }
  const int k_count = seg.cluster_count();
  SegmentStats stats;
  stats.mean_log_depth.assign(k_count, 0.0);
  stats.valid_count.assign(k_count, 0);
  stats.flagged.assign(k_count, 0);
  stats.members.assign(k_count, {});
  std::vector<double> sums(k_count, 0.0);
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      const int k = seg.labels(x, y);
      if (k < 0 || k >= k_count) {
        throw InvalidArgument("segment_stats: label out of range");
      }
      stats.members[k].push_back(static_cast<int>(seg.labels.index(x, y)));
      if (depth.valid(x, y)) {
        sums[k] += std::log(depth.depth(x, y));
        ++stats.valid_count[k];
      }
    }
  }
  for (int k = 0; k < k_count; ++k) {
    if (stats.valid_count[k] == 0) {
      stats.flagged[k] = 1;
    } else {
      stats.mean_log_depth[k] = sums[k] / stats.valid_count[k];
    }
  }
  return stats;
}

Mask segment_boundaries(const Grid<std::int32_t>& labels) {
  Mask out(labels.width(), labels.height(), 0);
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) {
      const auto l = labels(x, y);
      if ((x + 1 < labels.width() && labels(x + 1, y) != l) ||
          (y + 1 < labels.height() && labels(x, y + 1) != l)) {
        out(x, y) = 1;
      }
    }
  }
  return out;
}

}  // namespace geodepth
