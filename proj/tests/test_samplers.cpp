#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "mcdiag/samplers/exponential.hpp"
#include "mcdiag/samplers/logistic.hpp"
#include "mcdiag/samplers/optimize.hpp"
#include "mcdiag/samplers/sixmodal.hpp"

using namespace mcdiag;

namespace {

LogisticData tiny_data() {
  LogisticData d;
  d.design.resize(4, 2);
  d.design << 1, 0.5, 1, -1.0, 1, 2.0, 1, 0.0;
  d.response.resize(4);
  d.response << 1, 0, 1, 0;
  return d;
}

Vector beta3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

}  // namespace

TEST(ExpIndependence, AcceptanceProbability) {
  EXPECT_NEAR(exp_independence_acceptance(1.0, 2.0, 0.5), std::exp(-0.5), 1e-15);
  EXPECT_EQ(exp_independence_acceptance(2.0, 1.0, 0.5), 1.0);
  EXPECT_EQ(exp_independence_acceptance(1.0, 9.0, 1.0), 1.0);
  for (double x : {0.1, 1.0, 5.0})
    for (double y : {0.1, 1.0, 5.0})
      for (double t : {0.2, 1.0, 4.0}) {
        const double a = exp_independence_acceptance(x, y, t);
        EXPECT_GE(a, 0.0);
        EXPECT_LE(a, 1.0);
      }
}

TEST(ExpIndependence, ThetaOneAcceptsEverything) {
  ExpIndependenceConfig cfg;
  cfg.theta = 1.0;
  cfg.n = 20000;
  const auto r = independence_mh_exp(cfg);
  EXPECT_EQ(r.acceptance_rate, 1.0);
  const auto& x = r.chain.draws();
  EXPECT_NEAR(x.mean(), 1.0, 0.03);
  // Successive draws are independent.
  const Vector c = x.col(0).array() - x.mean();
  EXPECT_NEAR(c.head(19999).dot(c.tail(19999)) / c.squaredNorm(), 0.0, 0.03);
}

TEST(ExpIndependence, DeterministicAndValidated) {
  ExpIndependenceConfig cfg;
  cfg.seed = 7;
  EXPECT_EQ(independence_mh_exp(cfg).chain.draws(), independence_mh_exp(cfg).chain.draws());
  auto other = cfg;
  other.stream = 1;
  EXPECT_NE(independence_mh_exp(cfg).chain.draws(), independence_mh_exp(other).chain.draws());
  cfg.theta = 0.0;
  EXPECT_THROW(independence_mh_exp(cfg), DiagnosticError);
  cfg.theta = 0.5;
  cfg.x0 = -1.0;
  EXPECT_THROW(independence_mh_exp(cfg), DiagnosticError);
}

TEST(ExpIndependence, StatesStayPositive) {
  ExpIndependenceConfig cfg;
  cfg.theta = 5.0;
  cfg.n = 5000;
  const auto r = independence_mh_exp(cfg);
  EXPECT_GT(r.chain.draws().minCoeff(), 0.0);
  EXPECT_GT(r.acceptance_rate, 0.0);
  EXPECT_LT(r.acceptance_rate, 1.0);
}

TEST(TvBound, Examples) {
  EXPECT_EQ(tv_bound_burnin(0.5, 0.01), 7u);
  EXPECT_EQ(tv_bound_burnin(0.5, 0.5), 1u);
  EXPECT_EQ(tv_bound_burnin(0.9, 0.01), 2u);
  EXPECT_THROW(tv_bound_burnin(1.0, 0.01), DiagnosticError);
  EXPECT_THROW(tv_bound_burnin(5.0, 0.01), DiagnosticError);
  EXPECT_THROW(tv_bound_burnin(0.5, 0.0), DiagnosticError);
}

TEST(TvBound, SmallestSufficientN) {
  for (double theta : {0.05, 0.3, 0.5, 0.77})
    for (double delta : {0.2, 0.01, 1e-4}) {
      const auto n = tv_bound_burnin(theta, delta);
      EXPECT_LE(std::pow(1.0 - theta, static_cast<double>(n)), delta * (1.0 + 1e-9));
      if (n > 1) EXPECT_GT(std::pow(1.0 - theta, static_cast<double>(n - 1)), delta);
    }
}

TEST(Sixmodal, HandValue) {
  EXPECT_NEAR(sixmodal_logdensity(0.5, std::numbers::pi / 2), -0.25, 1e-12);
  EXPECT_EQ(sixmodal_logdensity(11.0, 0.3), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(sixmodal_logdensity(0.0, 0.0), -std::numeric_limits<double>::infinity());
}

TEST(Sixmodal, ReflectionSymmetry) {
  for (double x : {-2.0, -0.3, 0.4, 1.7})
    for (double y : {0.3, 1.1, 1.5, 2.9})
      EXPECT_NEAR(sixmodal_logdensity(x, y), sixmodal_logdensity(x, std::numbers::pi - y),
                  1e-8 * std::max(1.0, std::abs(sixmodal_logdensity(x, y))));
}

TEST(Sixmodal, GradientMatchesFiniteDifferences) {
  for (double x : {-0.7, 0.2, 0.9})
    for (double y : {1.2, 1.8, -1.4, 4.5}) {
      const auto g = sixmodal_gradient(x, y);
      const double h = 1e-6;
      const double gx = (sixmodal_logdensity(x + h, y) - sixmodal_logdensity(x - h, y)) / (2 * h);
      const double gy = (sixmodal_logdensity(x, y + h) - sixmodal_logdensity(x, y - h)) / (2 * h);
      EXPECT_NEAR(g(0), gx, 1e-5 * std::max(1.0, std::abs(gx)));
      EXPECT_NEAR(g(1), gy, 1e-5 * std::max(1.0, std::abs(gy)));
    }
}

TEST(Sixmodal, SixModesInBox) {
  const auto modes = sixmodal_modes();
  ASSERT_EQ(modes.size(), 6u);
  const std::vector<double> ys = {-5 * std::numbers::pi / 2, -3 * std::numbers::pi / 2, -std::numbers::pi / 2,
                                  std::numbers::pi / 2,      3 * std::numbers::pi / 2,  5 * std::numbers::pi / 2};
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_NEAR(modes[k](1), ys[k], 1e-4);
    // csc(y)^5 = +-1 at the modes, so x = csc^5 / 2.
    EXPECT_NEAR(std::abs(modes[k](0)), 0.5, 1e-4);
  }
}

TEST(Sixmodal, SamplerStaysInBoxAndIsDeterministic) {
  SixmodalConfig cfg;
  cfg.n = 5000;
  const auto a = sixmodal_mwg(cfg), b = sixmodal_mwg(cfg);
  EXPECT_EQ(a.chain.draws(), b.chain.draws());
  EXPECT_LE(a.chain.draws().cwiseAbs().maxCoeff(), kSixmodalBound);
  EXPECT_GT(a.acceptance_rate, 0.0);
  EXPECT_LE(a.acceptance_rate, 1.0);
  cfg.y0 = 0.0;
  EXPECT_THROW(sixmodal_mwg(cfg), DiagnosticError);
}

TEST(Logistic, ZeroCoefficientsGiveLogHalf) {
  const auto d = tiny_data();
  const Vector zero = Vector::Zero(2);
  const double prior = -std::log(2.0 * std::numbers::pi * 100.0);
  EXPECT_NEAR(logistic_log_posterior(zero, d).value - prior, -4.0 * std::log(2.0), 1e-12);
}

TEST(Logistic, SaturatesForLargeIntercept) {
  LogisticData d;
  d.design = Matrix::Ones(1, 1);
  d.response = Vector::Ones(1);
  const double prior_sd = 1e6;
  for (double b : {10.0, 40.0, 800.0}) {
    const double prior = -0.5 * b * b / (prior_sd * prior_sd) - 0.5 * std::log(2.0 * std::numbers::pi * prior_sd * prior_sd);
    const double ll = logistic_log_posterior(Vector::Constant(1, b), d, prior_sd).value - prior;
    EXPECT_LT(std::abs(ll), 1e-4);
    EXPECT_TRUE(std::isfinite(ll));
  }
  EXPECT_TRUE(std::isfinite(logistic_log_posterior(Vector::Constant(1, -800.0), d).value));
}

TEST(Logistic, GradientMatchesCentralDifferences) {
  const auto data = synth_logistic_data(200, beta3(-0.5, 1.0, -0.75), 3);
  Rng rng(4);
  for (int k = 0; k < 100; ++k) {
    const Vector b = beta3(2 * rng.normal(), 2 * rng.normal(), 2 * rng.normal());
    const Vector g = logistic_log_posterior(b, data).gradient;
    for (Eigen::Index j = 0; j < 3; ++j) {
      const double h = 1e-5;
      Vector up = b, down = b;
      up(j) += h;
      down(j) -= h;
      const double fd = (logistic_log_posterior(up, data).value - logistic_log_posterior(down, data).value) / (2 * h);
      EXPECT_NEAR(g(j), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(Logistic, HessianMatchesGradientDifferences) {
  const auto data = synth_logistic_data(100, beta3(0.2, -1.0, 0.5), 5);
  const Vector b = beta3(0.1, -0.4, 0.9);
  const Matrix hess = logistic_log_posterior_hessian(b, data);
  for (Eigen::Index j = 0; j < 3; ++j) {
    const double h = 1e-5;
    Vector up = b, down = b;
    up(j) += h;
    down(j) -= h;
    const Vector col = (logistic_log_posterior(up, data).gradient - logistic_log_posterior(down, data).gradient) / (2 * h);
    for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(hess(i, j), col(i), 1e-5 * std::max(1.0, std::abs(col(i))));
  }
}

TEST(SynthLogistic, ResponseRates) {
  const auto zero = synth_logistic_data(10000, Vector::Zero(3), 6);
  EXPECT_NEAR(zero.response.mean(), 0.5, 0.05);
  EXPECT_EQ(zero.design.col(0), Vector::Ones(10000));
  const auto high = synth_logistic_data(10000, beta3(10.0, 0.0, 0.0), 6);
  EXPECT_GT(high.response.mean(), 0.99);
  EXPECT_EQ(synth_logistic_data(50, beta3(1, 2, 3), 7).design, synth_logistic_data(50, beta3(1, 2, 3), 7).design);
  EXPECT_EQ(synth_logistic_data(50, beta3(1, 2, 3), 7).response, synth_logistic_data(50, beta3(1, 2, 3), 7).response);
}

TEST(FindMode, StandardNormal) {
  const auto r = find_mode([](const Vector& x) { return -0.5 * x.squaredNorm(); }, {}, Vector::Constant(1, 3.0));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.point(0), 0.0, 1e-6);
}

TEST(FindMode, LogisticGradientVanishes) {
  const auto data = synth_logistic_data(200, beta3(-0.5, 1.0, -0.75), 3);
  const auto r = find_logistic_mode(data);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(logistic_log_posterior(r.point, data).gradient.norm(), 1e-6);
}

TEST(FindMode, OutsideSupportErrors) {
  EXPECT_THROW(find_mode(sixmodal_target(), Vector::Constant(2, 20.0)), DiagnosticError);
}

TEST(LogisticRwmh, TinyProposalAcceptsAlmostAll) {
  const auto data = synth_logistic_data(200, beta3(-0.5, 1.0, -0.75), 3);
  LogisticRwmhConfig cfg;
  cfg.n = 2000;
  cfg.start = find_logistic_mode(data).point;
  cfg.tau = 1e-10;
  EXPECT_GT(logistic_rwmh(data, cfg).acceptance_rate, 0.99);
}

TEST(LogisticRwmh, TunedAcceptanceNearTarget) {
  const auto data = synth_logistic_data(200, beta3(-0.5, 1.0, -0.75), 3);
  LogisticRwmhConfig cfg;
  cfg.start = find_logistic_mode(data).point;
  cfg.preconditioner = logistic_preconditioner(data, cfg.start);
  cfg.tau = tune_rwmh_scale(data, cfg);
  cfg.n = 5000;
  const auto r = logistic_rwmh(data, cfg);
  EXPECT_GT(r.acceptance_rate, 0.3);
  EXPECT_LT(r.acceptance_rate, 0.5);
  EXPECT_EQ(r.chain.draws(), logistic_rwmh(data, cfg).chain.draws());
}
