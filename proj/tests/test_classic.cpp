#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mcdiag/distributions.hpp"
#include "mcdiag/geweke.hpp"
#include "mcdiag/heidelberger_welch.hpp"
#include "mcdiag/raftery_lewis.hpp"
#include "mcdiag/rng.hpp"

using namespace mcdiag;

namespace {

std::vector<double> iid_normal(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

std::vector<double> ar1(std::size_t n, double phi, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  double x = 0.0;
  for (auto& out : v) {
    x = phi * x + rng.normal();
    out = x;
  }
  return v;
}

std::vector<double> alternating(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i % 2);
  return v;
}

}  // namespace

TEST(Geweke, AlternatingSeriesGivesZero) {
  const auto r = geweke(ScalarSeries::from(alternating(1000)));
  EXPECT_EQ(r.n_a, 100u);
  EXPECT_EQ(r.n_b, 500u);
  EXPECT_DOUBLE_EQ(r.mean_a, r.mean_b);
  EXPECT_EQ(r.z, 0.0);
}

TEST(Geweke, AffineEquivariant) {
  const auto v = ar1(5000, 0.5, 1);
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = -2.0 * v[i] + 30.0;
  const double z = geweke(ScalarSeries::from(v)).z;
  EXPECT_NEAR(geweke(ScalarSeries::from(w)).z, -z, 1e-9 * std::max(1.0, std::abs(z)));
}

TEST(Geweke, TrendDetected) {
  auto v = iid_normal(10000, 2);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += 1e-3 * static_cast<double>(i);
  EXPECT_GT(std::abs(geweke(ScalarSeries::from(v)).z), 10.0);
}

TEST(Geweke, Errors) {
  EXPECT_THROW(geweke(ScalarSeries::from(iid_normal(1000, 3)), 0.6, 0.5), DiagnosticError);
  EXPECT_THROW(geweke(ScalarSeries::from(iid_normal(50, 3))), DiagnosticError);
}

TEST(CramerVonMises, TabulatedQuantiles) {
  // Upper percentage points of the limiting W^2 distribution.
  EXPECT_NEAR(cramer_von_mises_cdf(0.34730), 0.90, 2e-3);
  EXPECT_NEAR(cramer_von_mises_cdf(0.46136), 0.95, 2e-3);
  EXPECT_NEAR(cramer_von_mises_cdf(0.74346), 0.99, 1e-3);
  EXPECT_EQ(cramer_von_mises_cdf(0.0), 0.0);
  EXPECT_NEAR(cramer_von_mises_cdf(5.0), 1.0, 1e-6);
}

TEST(CramerVonMises, Monotone) {
  double prev = 0.0;
  for (double x = 0.01; x < 3.0; x += 0.01) {
    const double c = cramer_von_mises_cdf(x);
    EXPECT_GE(c, prev - 1e-12);
    prev = c;
  }
}

TEST(HeidelbergerWelch, BridgeEndsAtZero) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = ScalarSeries::from(ar1(777, 0.9, seed));
    const auto bridge = brownian_bridge(s, spectral_var_zero(s).sigma2);
    EXPECT_NEAR(bridge.back(), 0.0, 1e-10);
  }
}

TEST(HeidelbergerWelch, IidPassesImmediately) {
  const auto r = heidelberger_welch(ScalarSeries::from(iid_normal(10000, 4)));
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.discard_fraction, 0.0);
  EXPECT_EQ(r.start, 0u);
}

TEST(HeidelbergerWelch, LinearTrendFails) {
  std::vector<double> v(10000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i + 1);
  const auto r = heidelberger_welch(ScalarSeries::from(v));
  EXPECT_FALSE(r.pass);
  EXPECT_DOUBLE_EQ(r.discard_fraction, 0.5);
}

TEST(HeidelbergerWelch, InitialTransientDiscarded) {
  auto v = iid_normal(10000, 5);
  for (std::size_t i = 0; i < 1500; ++i) v[i] += 5.0 * (1500.0 - static_cast<double>(i)) / 1500.0;
  const auto r = heidelberger_welch(ScalarSeries::from(v));
  EXPECT_TRUE(r.pass);
  EXPECT_GT(r.discard_fraction, 0.0);
}

TEST(RafteryLewisNmin, Values) {
  EXPECT_EQ(rl_nmin(0.5, 0.005, 0.95), 38415u);
  EXPECT_EQ(rl_nmin(0.5, 0.05, 0.95), 385u);
  EXPECT_EQ(rl_nmin(0.025, 0.005, 0.95), 3746u);
  EXPECT_EQ(rl_nmin(0.0, 0.005, 0.95), 0u);
  EXPECT_EQ(rl_nmin(1.0, 0.005, 0.95), 0u);
}

TEST(RafteryLewis, IidUniformIsIndependent) {
  Rng rng(6);
  std::vector<double> v(20000);
  for (auto& x : v) x = rng.uniform();
  const auto r = raftery_lewis(ScalarSeries::from(v), 0.5, 0.01, 0.95);
  EXPECT_EQ(r.k, 1u);
  EXPECT_GE(r.dependence_factor, 0.8);
  EXPECT_LE(r.dependence_factor, 1.5);
}

TEST(RafteryLewis, CorrelatedChainNeedsMore) {
  const auto r = raftery_lewis(ScalarSeries::from(ar1(20000, 0.95, 7)), 0.5, 0.01, 0.95);
  EXPECT_GT(r.dependence_factor, 5.0);
}

TEST(RafteryLewis, AlternatingHitsGuard) {
  const auto r = raftery_lewis(ScalarSeries::from(alternating(1000)), 0.5, 0.05, 0.95);
  EXPECT_DOUBLE_EQ(r.alpha01 + r.beta10, 2.0);
  EXPECT_EQ(r.burn_in, r.k);
}

TEST(RafteryLewis, MonotoneTransformInvariant) {
  const auto v = ar1(10000, 0.6, 8);
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = std::exp(v[i] / 3.0);
  const auto a = raftery_lewis(ScalarSeries::from(v), 0.25, 0.01, 0.95);
  const auto b = raftery_lewis(ScalarSeries::from(w), 0.25, 0.01, 0.95);
  EXPECT_EQ(a.k, b.k);
  EXPECT_EQ(a.burn_in, b.burn_in);
  EXPECT_EQ(a.run_length, b.run_length);
}

TEST(RafteryLewis, TooShortErrors) {
  EXPECT_THROW(raftery_lewis(ScalarSeries::from(iid_normal(1000, 9)), 0.5, 0.005, 0.95), DiagnosticError);
}

TEST(RafteryLewis, RunLengthClosedForm) {
  // First-order binary chain with known (alpha, beta); the estimate tracks the closed form.
  Rng rng(10);
  const double alpha = 0.1, beta = 0.3;
  std::vector<double> v(200000);
  int state = 0;
  for (auto& x : v) {
    const double u = rng.uniform();
    state = state == 0 ? (u < alpha ? 1 : 0) : (u < beta ? 0 : 1);
    x = state == 1 ? -1.0 : 1.0;
  }
  // P(state == 1) = alpha / (alpha + beta) = 0.25; the indicator of the lower level is the state itself.
  const auto r = raftery_lewis(ScalarSeries::from(v), 0.25, 0.01, 0.95);
  const double z = dist::normal_quantile(0.975);
  const double a = alpha, b = beta;
  const double expected = (2 - a - b) * a * b / std::pow(a + b, 3) * (z / 0.01) * (z / 0.01);
  EXPECT_EQ(r.k, 1u);
  EXPECT_NEAR(static_cast<double>(r.run_length) / expected, 1.0, 0.1);
}
