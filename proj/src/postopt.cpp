#include "geodepth/postopt.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "geodepth/errors.hpp"

namespace geodepth {

void OptWeights::validate() const {
  if (!(consistency >= 0.0) || !(vo >= 0.0) || !(prior >= 0.0)) {
    throw InvalidConfig("post-opt: weights must be non-negative");
  }
}

std::optional<InnerScale> inner_scale(std::span<const double> predicted,
                                      std::span<const double> vo,
                                      double mean_log_depth) {
  if (predicted.size() != vo.size()) {
    throw InvalidArgument("inner_scale: sample count mismatch");
  }
  if (predicted.empty()) return std::nullopt;
  double sum = 0.0;
  for (std::size_t i = 0; i < vo.size(); ++i) {
    if (!(predicted[i] > 0.0) || !(vo[i] > 0.0)) {
      throw InvalidArgument("inner_scale: depths must be positive");
    }
    sum += std::log(vo[i] / predicted[i]);
  }
  InnerScale out;
  out.samples = static_cast<int>(vo.size());
  out.log_scale = sum / out.samples;
  out.target = mean_log_depth + out.log_scale;
  return out;
}

OuterSystem::OuterSystem(std::vector<double> lg0, std::vector<double> lg_target,
                         std::vector<std::uint8_t> has_vo,
                         const OptWeights& weights)
    : lg0_(std::move(lg0)),
      lg_target_(std::move(lg_target)),
      has_vo_(std::move(has_vo)),
      weights_(weights) {
  weights_.validate();
  if (lg0_.size() != lg_target_.size() || lg0_.size() != has_vo_.size()) {
    throw InvalidArgument("outer system: inconsistent segment counts");
  }
  for (double v : lg0_) lg0_sum_ += v;
}

double OuterSystem::diagonal(int k) const {
  return (size() - 1) * weights_.consistency + vo_weight(k) + weights_.prior;
}

double OuterSystem::rhs(int k) const {
  // sum_{i != k} (lg0_k - lg0_i) == N lg0_k - sum lg0
  return weights_.prior * lg0_[k] + vo_weight(k) * lg_target_[k] +
         weights_.consistency * (size() * lg0_[k] - lg0_sum_);
}

Eigen::MatrixXd OuterSystem::matrix() const {
  const int n = size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n, n, off_diagonal());
  for (int k = 0; k < n; ++k) a(k, k) = diagonal(k);
  return a;
}

Eigen::VectorXd OuterSystem::rhs_vector() const {
  Eigen::VectorXd b(size());
  for (int k = 0; k < size(); ++k) b(k) = rhs(k);
  return b;
}

Eigen::VectorXd OuterSystem::residual(const Eigen::VectorXd& lg) const {
  const double total = lg.sum();
  Eigen::VectorXd r(size());
  for (int k = 0; k < size(); ++k) {
    // Row k of A times lg: diag * lg_k - w_c * sum_{i != k} lg_i.
    r(k) = diagonal(k) * lg(k) - weights_.consistency * (total - lg(k)) - rhs(k);
  }
  return r;
}

double OuterSystem::objective(const Eigen::VectorXd& lg) const {
  const int n = size();
  // sum_{k<j} (e_k - e_j)^2 == N sum e^2 - (sum e)^2 with e = lg - lg0.
  double sum_e = 0.0;
  double sum_e2 = 0.0;
  double value = 0.0;
  for (int k = 0; k < n; ++k) {
    const double e = lg(k) - lg0_[k];
    sum_e += e;
    sum_e2 += e * e;
    const double t = lg_target_[k] - lg(k);
    value += vo_weight(k) * t * t + weights_.prior * e * e;
  }
  return value + weights_.consistency * (n * sum_e2 - sum_e * sum_e);
}

namespace {

[[noreturn]] void throw_singular(const OuterSystem& system, int segment) {
  const OptWeights& w = system.weights();
  std::string msg = "outer system is singular (consistency=" +
                    std::to_string(w.consistency) +
                    ", vo=" + std::to_string(w.vo) +
                    ", prior=" + std::to_string(w.prior) + ")";
  if (segment >= 0) {
    msg += ": segment " + std::to_string(segment) +
           " has no VO samples and nothing else anchors it";
  } else {
    msg += ": with zero prior weight every segment needs VO samples";
  }
  throw SingularSystem(msg);
}

int first_unanchored(const OuterSystem& system) {
  for (int k = 0; k < system.size(); ++k) {
    if (!system.has_vo()[k]) return k;
  }
  return -1;
}

}  // namespace

Eigen::VectorXd solve_outer_dense(const OuterSystem& system) {
  if (system.size() == 0) return {};
  const Eigen::MatrixXd a = system.matrix();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw_singular(system, first_unanchored(system));
  return lu.solve(system.rhs_vector());
}

Eigen::VectorXd solve_outer(const OuterSystem& system) {
  const int n = system.size();
  if (n == 0) return {};
  const double wc = system.weights().consistency;
  Eigen::VectorXd inv_d(n);
  Eigen::VectorXd y(n);
  for (int k = 0; k < n; ++k) {
    const double d = n * wc + system.vo_weight(k) + system.weights().prior;
    if (!(d > 0.0)) throw_singular(system, k);
    inv_d(k) = 1.0 / d;
    y(k) = system.rhs(k) * inv_d(k);
  }
  if (wc == 0.0) return y;
  // (D - wc 1 1^T)^-1 b = D^-1 b + wc D^-1 1 (1^T D^-1 b) / (1 - wc 1^T D^-1 1)
  const double denom = 1.0 - wc * inv_d.sum();
  if (!(denom > 1e-12)) throw_singular(system, first_unanchored(system));
  return y + inv_d * (wc * y.sum() / denom);
}

double kkt_residual(const OuterSystem& system, const Eigen::VectorXd& lg) {
  if (system.size() == 0) return 0.0;
  return system.residual(lg).cwiseAbs().maxCoeff();
}

DepthMap apply_to_pixels(const DepthMap& depth, const Grid<std::int32_t>& labels,
                         std::span<const double> lg0,
                         std::span<const double> lg_solved,
                         std::span<const std::uint8_t> skip,
                         ScaleApplication mode) {
  if (labels.width() != depth.width() || labels.height() != depth.height()) {
    throw InvalidArgument("apply_to_pixels: labels and depth shapes differ");
  }
  if (lg0.size() != lg_solved.size() || (!skip.empty() && skip.size() != lg0.size())) {
    throw InvalidArgument("apply_to_pixels: per-segment arrays differ in length");
  }
  for (double v : lg_solved) {
    if (!std::isfinite(v)) throw InvalidArgument("apply_to_pixels: non-finite solution");
  }
  DepthMap out = depth;
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(x, y)) continue;
      const int k = labels(x, y);
      if (k < 0 || static_cast<std::size_t>(k) >= lg0.size()) {
        throw InvalidArgument("apply_to_pixels: label out of range");
      }
      if (!skip.empty() && skip[k]) continue;
      const double d = depth.depth(x, y);
      if (mode == ScaleApplication::kAdditive) {
        out.set(x, y, d * std::exp(lg_solved[k] - lg0[k]));
      } else if (lg0[k] != 0.0) {
        out.set(x, y, std::exp(std::log(d) * lg_solved[k] / lg0[k]));
      }
    }
  }
  return out;
}

PostOptResult post_optimize(const DepthMap& depth, const Image& image,
                            const SparseDepth& vo, const PostOptOptions& options) {
  if (image.width() != depth.width() || image.height() != depth.height()) {
    throw InvalidArgument("post-opt: image and depth shapes differ");
  }
  const Image lab =
      image.color_space() == ColorSpace::kLab ? image : rgb_to_lab(image);

  PostOptResult result;
  result.segmentation = slic3d(lab, depth, options.slic);
  const SegmentStats stats = segment_stats(result.segmentation, depth);
  const int k_count = result.segmentation.cluster_count();

  // VO association: nearest pixel, dropped when it misses the image or
  // lands on invalid predicted depth.
  std::vector<std::vector<double>> predicted(k_count);
  std::vector<std::vector<double>> measured(k_count);
  for (const SparseSample& s : vo) {
    const int x = static_cast<int>(std::lround(s.u));
    const int y = static_cast<int>(std::lround(s.v));
    if (!std::isfinite(s.u) || !std::isfinite(s.v) || x < 0 || y < 0 ||
        x >= depth.width() || y >= depth.height() || !depth.valid(x, y) ||
        !(s.depth > 0.0) || !std::isfinite(s.depth)) {
      ++result.vo_dropped;
      continue;
    }
    const int k = result.segmentation.labels(x, y);
    predicted[k].push_back(depth.depth(x, y));
    measured[k].push_back(s.depth);
    ++result.vo_used;
  }

  result.lg0 = stats.mean_log_depth;
  result.lg_target = stats.mean_log_depth;
  result.has_vo.assign(k_count, 0);
  result.flagged = stats.flagged;
  result.lg_solved = stats.mean_log_depth;

  std::vector<int> active;
  std::vector<double> lg0;
  std::vector<double> target;
  std::vector<std::uint8_t> has_vo;
  for (int k = 0; k < k_count; ++k) {
    if (stats.flagged[k]) continue;
    if (const auto inner = inner_scale(predicted[k], measured[k], stats.mean_log_depth[k])) {
      result.lg_target[k] = inner->target;
      result.has_vo[k] = 1;
    }
    active.push_back(k);
    lg0.push_back(result.lg0[k]);
    target.push_back(result.lg_target[k]);
    has_vo.push_back(result.has_vo[k]);
  }

  const OuterSystem system(std::move(lg0), std::move(target), std::move(has_vo),
                           options.weights);
  const Eigen::VectorXd solved = solve_outer(system);
  result.kkt_residual = kkt_residual(system, solved);
  for (std::size_t i = 0; i < active.size(); ++i) {
    result.lg_solved[active[i]] = solved(static_cast<Eigen::Index>(i));
  }
  result.depth = apply_to_pixels(depth, result.segmentation.labels, result.lg0,
                                 result.lg_solved, result.flagged, options.mode);
  return result;
}

}  // namespace geodepth
