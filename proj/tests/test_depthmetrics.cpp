#include <cmath>

#include <gtest/gtest.h>

#include "geodepth/depthmetrics.hpp"
#include "geodepth/errors.hpp"

using namespace geodepth;

namespace {

DepthMap from(std::initializer_list<double> v) {
  DepthMap d(static_cast<int>(v.size()), 1);
  int i = 0;
  for (double x : v) {
    if (x > 0) d.set(i, 0, x);
    ++i;
  }
  return d;
}

DepthMap scaled(const DepthMap& d, double s) {
  DepthMap out(d.width(), d.height());
  for (int x = 0; x < d.width(); ++x) {
    if (d.valid(x, 0)) out.set(x, 0, s * d.depth(x, 0));
  }
  return out;
}

}  // namespace

TEST(Metrics, IdentityIsPerfect) {
  const DepthMap g = from({3, 7, 12, 40});
  const MetricReport r = evaluate(g, g);
  EXPECT_EQ(r.abs_rel, 0);
  EXPECT_EQ(r.rmse, 0);
  EXPECT_EQ(r.delta1, 1);
  EXPECT_EQ(r.delta3, 1);
  EXPECT_EQ(r.valid_count, 4u);
}

TEST(Metrics, MedianScalingCancelsGlobalScale) {
  const DepthMap g = from({3, 7, 12, 40});
  EvalOptions o;
  o.scale = ScaleMode::kMedian;
  const MetricReport r = evaluate(scaled(g, 2), g, o);
  EXPECT_DOUBLE_EQ(r.scale, 0.5);
  EXPECT_NEAR(r.abs_rel, 0, 1e-15);
  EXPECT_NEAR(r.rmse_log, 0, 1e-15);
}

TEST(Metrics, ConstantRatio) {
  const DepthMap g = from({3, 7, 12, 40});
  const MetricReport r = evaluate(scaled(g, 1.2), g);
  EXPECT_NEAR(r.abs_rel, 0.2, 1e-12);
  EXPECT_EQ(r.delta1, 1);
  EXPECT_NEAR(r.rmse_log, std::log(1.2), 1e-12);
  EXPECT_NEAR(r.silog, 0, 1e-12);
}

TEST(Metrics, CapsAndMask) {
  const DepthMap g = from({3, 0, 120, 10});
  const DepthMap p = from({3, 5, 5, 0});
  const MetricReport r = evaluate(p, g);
  EXPECT_EQ(r.valid_count, 1u);
  EXPECT_THROW(evaluate(from({0, 0}), from({1, 1})), EmptyOverlap);
  EXPECT_THROW(evaluate(from({1}), from({1, 1})), InvalidArgument);
}

TEST(Metrics, DeltaStrictThreshold) {
  const DepthMap g = from({4.0});
  // Ratio exactly representable: 5 / 4 = 1.25 is excluded from delta1.
  EXPECT_EQ(evaluate(from({5.0}), g).delta1, 0.0);
  EXPECT_EQ(evaluate(from({5.0}), g).delta2, 1.0);
}

TEST(Metrics, AlreadyInsideCapsEqualsUncapped) {
  const DepthMap g = from({3, 7, 12, 40});
  const DepthMap p = from({4, 6, 15, 30});
  EvalOptions wide;
  wide.min_depth = 1e-9;
  wide.max_depth = 1e9;
  const MetricReport a = evaluate(p, g);
  const MetricReport b = evaluate(p, g, wide);
  EXPECT_DOUBLE_EQ(a.rmse, b.rmse);
  EXPECT_DOUBLE_EQ(a.sq_rel, b.sq_rel);
}

TEST(Silog, Forms) {
  const DepthMap g = from({3, 7, 12, 40});
  EXPECT_NEAR(silog_only(scaled(g, 3), g, 1.0), 0, 1e-12);
  EXPECT_NEAR(silog_only(g, g, 0.4), 0, 1e-15);
  const DepthMap p = from({4, 6, 15, 30});
  double mse = 0;
  for (int i = 0; i < 4; ++i) mse += std::pow(std::log(p.depth(i, 0) / g.depth(i, 0)), 2) / 4;
  EXPECT_NEAR(silog_only(p, g, 0.0), mse, 1e-12);
}
