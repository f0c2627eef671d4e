#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "geodepth/image.hpp"
#include "geodepth/slic3d.hpp"

namespace geodepth {

struct SparseSample {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;  // m
};

using SparseDepth = std::vector<SparseSample>;

/// Weights of the segment-level objective
///   sum_{k<j} w_c ((lg_k - lg_j) - (lg0_k - lg0_j))^2
///   + sum_k w_vo[k] (lg_tar_k - lg_k)^2 + w_p (lg_k - lg0_k)^2
/// where w_vo[k] is `vo` for segments holding VO samples and 0 otherwise.
struct OptWeights {
  double consistency = 1e-3;  // appears N - 1 times per row; keep (N - 1) w_c below vo
  double vo = 4.0;
  double prior = 1.0;

  void validate() const;
};

struct InnerScale {
  double log_scale = 0.0;  // mean log(d_vo / d_pred)
  double target = 0.0;     // lg0 + log_scale
  int samples = 0;
};

/// Least-squares log scale aligning predicted depths to VO depths inside one
/// segment. Empty when there are no samples.
std::optional<InnerScale> inner_scale(std::span<const double> predicted,
                                      std::span<const double> vo,
                                      double mean_log_depth);

/// Normal equations A lg = B of the segment objective. A has diagonal
/// (N - 1) w_c + w_vo[k] + w_p and off-diagonal -w_c.
class OuterSystem {
 public:
  OuterSystem(std::vector<double> lg0, std::vector<double> lg_target,
              std::vector<std::uint8_t> has_vo, const OptWeights& weights);

  int size() const { return static_cast<int>(lg0_.size()); }
  const OptWeights& weights() const { return weights_; }
  const std::vector<double>& lg0() const { return lg0_; }
  const std::vector<double>& lg_target() const { return lg_target_; }
  const std::vector<std::uint8_t>& has_vo() const { return has_vo_; }

  double vo_weight(int k) const { return has_vo_[k] ? weights_.vo : 0.0; }
  double diagonal(int k) const;
  double off_diagonal() const { return -weights_.consistency; }
  double rhs(int k) const;

  Eigen::MatrixXd matrix() const;
  Eigen::VectorXd rhs_vector() const;

  // A lg - B in O(N).
  Eigen::VectorXd residual(const Eigen::VectorXd& lg) const;
  double objective(const Eigen::VectorXd& lg) const;

 private:
  std::vector<double> lg0_;
  std::vector<double> lg_target_;
  std::vector<std::uint8_t> has_vo_;
  OptWeights weights_;
  double lg0_sum_ = 0.0;
};

/// Reference path: dense LU of A. Throws SingularSystem.
Eigen::VectorXd solve_outer_dense(const OuterSystem& system);

/// O(N) path using A = diag(N w_c + w_vo[k] + w_p) - w_c 1 1^T and the
/// Sherman-Morrison formula. Throws SingularSystem.
Eigen::VectorXd solve_outer(const OuterSystem& system);

double kkt_residual(const OuterSystem& system, const Eigen::VectorXd& lg);

enum class ScaleApplication {
  // lg_out = lg_net + (lg_solved - lg0)
  kAdditive,
  // lg_out = lg_net * lg_solved / lg0, the ratio-of-log-depths variant.
  kMultiplicative,
};

/// Moves every valid pixel of segment k by its solved offset. Segments with
/// `skip[k] != 0` (and invalid pixels) pass through unchanged.
DepthMap apply_to_pixels(const DepthMap& depth, const Grid<std::int32_t>& labels,
                         std::span<const double> lg0,
                         std::span<const double> lg_solved,
                         std::span<const std::uint8_t> skip = {},
                         ScaleApplication mode = ScaleApplication::kAdditive);

struct PostOptOptions {
  SlicParams slic;
  OptWeights weights;
  ScaleApplication mode = ScaleApplication::kAdditive;
};

struct PostOptResult {
  DepthMap depth;
  Segmentation segmentation;
  std::vector<double> lg0;
  std::vector<double> lg_target;
  std::vector<double> lg_solved;
  std::vector<std::uint8_t> has_vo;
  std::vector<std::uint8_t> flagged;  // segments left out of the system
  int vo_used = 0;
  int vo_dropped = 0;
  double kkt_residual = 0.0;
};

/// Full pipeline: 3D SLIC on (image, depth), per-segment mean log depth,
/// inner VO scale, outer solve, per-pixel application. `image` may be RGB
/// (converted to LAB) or LAB.
PostOptResult post_optimize(const DepthMap& depth, const Image& image,
                            const SparseDepth& vo,
                            const PostOptOptions& options = {});

}  // namespace geodepth
