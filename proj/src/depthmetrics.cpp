#include "geodepth/depthmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "geodepth/errors.hpp"

namespace geodepth {

namespace {

// Neumaier compensated sum; keeps reductions independent of magnitude order.
class Sum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  const double hi = *mid;
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

struct Pairs {
  std::vector<double> pred;
  std::vector<double> gt;
};

Pairs collect(const DepthMap& pred, const DepthMap& gt, const EvalOptions& o) {
  if (!pred.same_shape(gt)) throw InvalidArgument("evaluate: pred and gt shapes differ");
  if (!(o.min_depth > 0.0) || !(o.max_depth > o.min_depth)) {
    throw InvalidArgument("evaluate: depth caps must satisfy 0 < min < max");
  }
  Pairs out;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!pred.valid(x, y) || !gt.valid(x, y)) continue;
      const double g = gt.depth(x, y);
      if (g < o.min_depth || g > o.max_depth) continue;
      out.pred.push_back(pred.depth(x, y));
      out.gt.push_back(g);
    }
  }
  if (out.gt.empty()) throw EmptyOverlap("evaluate: no pixel is valid in both maps within the caps");
  return out;
}

}  // namespace

MetricReport evaluate(const DepthMap& pred, const DepthMap& gt,
                      const EvalOptions& options) {
  Pairs p = collect(pred, gt, options);
  MetricReport r;
  r.valid_count = p.gt.size();
  if (options.scale == ScaleMode::kMedian) {
    r.scale = median(p.gt) / median(p.pred);
  }
  Sum abs_rel, sq_rel, sq, sq_log, d, d2;
  std::size_t n1 = 0, n2 = 0, n3 = 0;
  for (std::size_t i = 0; i < p.gt.size(); ++i) {
    const double g = p.gt[i];
    const double q = std::clamp(p.pred[i] * r.scale, options.min_depth, options.max_depth);
    const double diff = q - g;
    abs_rel.add(std::abs(diff) / g);
    sq_rel.add(diff * diff / g);
    sq.add(diff * diff);
    const double ld = std::log(q) - std::log(g);
    sq_log.add(ld * ld);
    d.add(ld);
    d2.add(ld * ld);
    const double ratio = std::max(q / g, g / q);
    if (ratio < 1.25) ++n1;
    if (ratio < 1.25 * 1.25) ++n2;
    if (ratio < 1.25 * 1.25 * 1.25) ++n3;
  }
  const double n = static_cast<double>(r.valid_count);
  r.abs_rel = abs_rel.value() / n;
  r.sq_rel = sq_rel.value() / n;
  r.rmse = std::sqrt(sq.value() / n);
  r.rmse_log = std::sqrt(sq_log.value() / n);
  r.delta1 = n1 / n;
  r.delta2 = n2 / n;
  r.delta3 = n3 / n;
  const double mean_d = d.value() / n;
  r.silog = std::max(0.0, d2.value() / n - mean_d * mean_d);
  return r;
}

double silog_only(const DepthMap& pred, const DepthMap& gt, double lambda,
                  const EvalOptions& options) {
  const Pairs p = collect(pred, gt, options);
  Sum d, d2;
  for (std::size_t i = 0; i < p.gt.size(); ++i) {
    const double ld = std::log(p.pred[i]) - std::log(p.gt[i]);
    d.add(ld);
    d2.add(ld * ld);
  }
  const double n = static_cast<double>(p.gt.size());
  const double mean_d = d.value() / n;
  return d2.value() / n - lambda * mean_d * mean_d;
}

}  // namespace geodepth
