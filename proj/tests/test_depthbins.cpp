#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "geodepth/depthbins.hpp"
#include "geodepth/errors.hpp"

using namespace geodepth;

TEST(DepthBins, Endpoints) {
  BinSpec s{1, 100, 2, 700};
  const auto c = bin_centers(s, 700);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_NEAR(c[0], 1, 1e-12);
  EXPECT_NEAR(c[1], 100, 1e-12);
}

TEST(DepthBins, GeometricMidpoint) {
  BinSpec s{1, 100, 3, 700};
  const auto c = bin_centers(s, 700);
  EXPECT_NEAR(c[1], 10, 1e-12);
}

TEST(DepthBins, FocalScaling) {
  BinSpec s{0.5, 80, 16, 700};
  const auto a = bin_centers(s, 700);
  const auto b = bin_centers(s, 1400);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], 2 * a[i], 1e-12);
}

TEST(DepthBins, DecodeSoftmax) {
  BinSpec s{1, 100, 2, 700};
  const float uniform[2] = {0, 0};
  EXPECT_NEAR(decode_bins(s, 700, uniform), 50.5, 1e-9);
  const float skew[2] = {static_cast<float>(std::log(3.0)), 0};
  EXPECT_NEAR(decode_bins(s, 700, skew), 25.75, 1e-5);
  const float hot[2] = {0, 1000};
  EXPECT_NEAR(decode_bins(s, 700, hot), 100, 1e-9);
}

TEST(DepthBins, InitialMean) {
  const BinSpec s{0.1, 100, 64, 700};
  EXPECT_NEAR(initial_mean(s), 99.9 / std::log(1000.0), 1e-12);
  EXPECT_GT(initial_mean(s), 10.0);
  const BinSpec tight{2.0, 2.0 + 1e-9, 64, 700};
  EXPECT_NEAR(initial_mean(tight), 2.0, 1e-6);
}

TEST(DepthBins, EmpiricalMeanApproachesTheorem) {
  double prev = INFINITY;
  for (int n = 64; n <= 2048; n *= 2) {
    const double err = std::abs(empirical_bin_mean({0.1, 100, n, 700}) - 14.462);
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(DepthBins, InvalidSpecRejected) {
  EXPECT_THROW((BinSpec{1, 1, 4, 700}.validate()), InvalidArgument);
  EXPECT_THROW((BinSpec{1, 10, 1, 700}.validate()), InvalidArgument);
  EXPECT_THROW((BinSpec{0, 10, 4, 700}.validate()), InvalidArgument);
}

TEST(DepthBins, SigmoidBaseline) {
  EXPECT_NEAR(sigmoid_decode_baseline(0, 0.1, 100), 1 / 5.005, 1e-12);
  EXPECT_NEAR(sigmoid_decode_baseline(50, 0.1, 100), 0.1, 1e-9);
  EXPECT_NEAR(sigmoid_decode_baseline(-50, 0.1, 100), 100, 1e-6);
}

TEST(DepthBins, CameraAwareZ) {
  EXPECT_NEAR(camera_aware_z(0, 500, 500), 1.0, 1e-12);
  EXPECT_NEAR(camera_aware_z(0, 1000, 500), 2.0, 1e-12);
  EXPECT_NEAR(camera_aware_z(-1000, 500, 500, 80.0), 80.0, 1e-12);
}

TEST(DepthBins, DistillNll) {
  EXPECT_NEAR(distill_nll(5, 5, 1), 0.0, 1e-12);
  EXPECT_NEAR(distill_nll(std::exp(1.0) * 5, 5, 1), 1.0, 1e-12);
  EXPECT_THROW(distill_nll(0, 1, 1), InvalidArgument);
  // Minimizer over sigma sits at the log residual.
  const double r = std::log(3.0);
  double best_sigma = 0, best = INFINITY;
  for (double s = 0.01; s < 5; s += 1e-4) {
    const double l = distill_nll(3, 1, s);
    if (l < best) {
      best = l;
      best_sigma = s;
    }
  }
  EXPECT_NEAR(best_sigma, r, 2e-4);
  EXPECT_NEAR(distill_nll_log_sigma(3, 1, std::log(0.7)), distill_nll(3, 1, 0.7), 1e-12);
}
