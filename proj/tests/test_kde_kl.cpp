#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "mcdiag/kde.hpp"
#include "mcdiag/kl.hpp"
#include "mcdiag/rng.hpp"
#include "mcdiag/target.hpp"

using namespace mcdiag;

namespace {

Matrix normal_sample(std::size_t n, std::size_t d, std::uint64_t seed, double shift = 0.0) {
  Rng rng(seed);
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.normal() + shift;
  return m;
}

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// Direct evaluation of the adaptive mixture from its parts, no truncation.
double mixture_oracle(const KdeModel& m, const Vector& x) {
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    double term = 1.0;
    for (std::size_t j = 0; j < m.dim(); ++j) {
      const double s = m.bandwidth()[j] * m.local_factors()[i];
      term *= phi((x(static_cast<Eigen::Index>(j)) - m.point(i)(static_cast<Eigen::Index>(j))) / s) / s;
    }
    total += term;
  }
  return total / static_cast<double>(m.size());
}

TargetModel standard_normal_target() {
  TargetModel t;
  t.name = "normal";
  t.dim = 1;
  t.log_f = [](const Vector& x) { return -0.5 * x(0) * x(0) - 0.5 * std::log(2.0 * std::numbers::pi); };
  t.lower = Vector::Constant(1, -10.0);
  t.upper = Vector::Constant(1, 10.0);
  return t;
}

KlMatrix kl_matrix(const Matrix& values) {
  KlMatrix k;
  k.values = values;
  return k;
}

}  // namespace

TEST(Kde, MatchesDirectMixture) {
  const auto m = adaptive_kde_fit(normal_sample(500, 2, 1));
  Rng rng(2);
  for (int k = 0; k < 50; ++k) {
    Vector x(2);
    x << 3.0 * rng.normal(), 3.0 * rng.normal();
    const double oracle = mixture_oracle(m, x);
    EXPECT_NEAR(m.density(x), oracle, 1e-8 * oracle + 1e-300);
  }
}

TEST(Kde, FarPointsMatchLogSpaceOracle) {
  const auto m = adaptive_kde_fit(normal_sample(300, 1, 3));
  for (double x : {15.0, 40.0, -60.0}) {
    std::vector<double> terms;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double s = m.bandwidth()[0] * m.local_factors()[i];
      const double u = (x - m.point(i)(0)) / s;
      terms.push_back(-0.5 * u * u - std::log(s) - 0.5 * std::log(2.0 * std::numbers::pi));
    }
    const double peak = *std::max_element(terms.begin(), terms.end());
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - peak);
    const double oracle = peak + std::log(sum) - std::log(static_cast<double>(m.size()));
    const double ld = m.log_density(&x);
    ASSERT_TRUE(std::isfinite(ld));
    EXPECT_NEAR(ld, oracle, 1e-9 * std::abs(oracle));
  }
}

TEST(Kde, SymmetricPairHasUnitFactors) {
  Matrix pts(2, 1);
  pts << -1.0, 1.0;
  const auto m = adaptive_kde_fit(pts);
  EXPECT_NEAR(m.local_factors()[0], 1.0, 1e-15);
  EXPECT_NEAR(m.local_factors()[1], 1.0, 1e-15);
}

TEST(Kde, TailPointsGetWiderKernels) {
  const auto sample = normal_sample(2000, 1, 4);
  const auto m = adaptive_kde_fit(sample);
  Eigen::Index lo, hi;
  sample.col(0).cwiseAbs().minCoeff(&lo);
  sample.col(0).cwiseAbs().maxCoeff(&hi);
  EXPECT_GT(m.local_factors()[static_cast<std::size_t>(hi)], m.local_factors()[static_cast<std::size_t>(lo)]);
}

TEST(Kde, L1DistanceToNormal) {
  const auto m = adaptive_kde_fit(normal_sample(10000, 1, 5));
  const double dx = 0.01;
  double l1 = 0.0;
  for (double x = -8.0 + dx / 2; x < 8.0; x += dx) l1 += std::abs(m.density(Vector::Constant(1, x)) - phi(x)) * dx;
  EXPECT_LT(l1, 0.05);
}

TEST(Kde, IntegratesToOne) {
  const auto m1 = adaptive_kde_fit(normal_sample(5000, 1, 6));
  double mass = 0.0;
  const double dx = 0.01;
  for (double x = -10.0 + dx / 2; x < 10.0; x += dx) mass += m1.density(Vector::Constant(1, x)) * dx;
  EXPECT_NEAR(mass, 1.0, 1e-3);

  const auto m2 = adaptive_kde_fit(normal_sample(1000, 2, 7));
  const double h = 0.05;
  mass = 0.0;
  Vector x(2);
  for (double a = -7.0 + h / 2; a < 7.0; a += h)
    for (double b = -7.0 + h / 2; b < 7.0; b += h) {
      x << a, b;
      mass += m2.density(x) * h * h;
    }
  EXPECT_NEAR(mass, 1.0, 1e-3);
}

TEST(Kde, RequiresSpread) {
  EXPECT_THROW(adaptive_kde_fit(Matrix::Constant(10, 1, 2.0)), DiagnosticError);
  EXPECT_THROW(adaptive_kde_fit(Matrix::Zero(1, 1)), DiagnosticError);
}

TEST(KdeSample, MeanWithinThreeStandardErrors) {
  const auto sample = normal_sample(3000, 2, 8, 1.5);
  const auto m = adaptive_kde_fit(sample);
  const std::size_t count = 100000;
  const Matrix z = m.sample(count, 9);
  for (Eigen::Index j = 0; j < 2; ++j) {
    // Mixture variance: spread of the support points plus the mean kernel variance.
    const double mu = m.mean()(j);
    double var = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double s = m.bandwidth()[static_cast<std::size_t>(j)] * m.local_factors()[i];
      var += std::pow(m.point(i)(j) - mu, 2) + s * s;
    }
    var /= static_cast<double>(m.size());
    EXPECT_NEAR(z.col(j).mean(), mu, 3.0 * std::sqrt(var / static_cast<double>(count)));
  }
}

TEST(KdeSample, Deterministic) {
  const auto m = adaptive_kde_fit(normal_sample(400, 2, 10));
  EXPECT_EQ(m.sample(1000, 11), m.sample(1000, 11));
  EXPECT_NE(m.sample(1000, 11), m.sample(1000, 12));
}

TEST(Kl, SameModelIsZero) {
  const auto m = adaptive_kde_fit(normal_sample(1000, 1, 13));
  const auto est = kl_estimate(m, m, 1000, 1);
  EXPECT_EQ(est.value, 0.0);
  EXPECT_EQ(est.raw, 0.0);
}

TEST(Kl, SeparatedNormalsMatchClosedForm) {
  const auto a = adaptive_kde_fit(normal_sample(10000, 1, 14));
  const auto b = adaptive_kde_fit(normal_sample(10000, 1, 15, 10.0));
  const double forward = kl_estimate(a, b, 10000, 1).value;
  const double backward = kl_estimate(b, a, 10000, 2).value;
  EXPECT_NEAR(forward + backward, 100.0, 25.0);
}

TEST(Kl, MatchesDirectMonteCarloOracle) {
  const auto a = adaptive_kde_fit(normal_sample(1500, 1, 26));
  const auto b = adaptive_kde_fit(normal_sample(1500, 1, 27, 4.0));
  const auto log_mixture = [](const KdeModel& m, double x) {
    std::vector<double> terms;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double s = m.bandwidth()[0] * m.local_factors()[i];
      const double u = (x - m.point(i)(0)) / s;
      terms.push_back(-0.5 * u * u - std::log(s));
    }
    const double peak = *std::max_element(terms.begin(), terms.end());
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - peak);
    return peak + std::log(sum);
  };
  const Matrix z = a.sample(2000, 3);
  double oracle = 0.0;
  for (Eigen::Index k = 0; k < z.rows(); ++k) oracle += log_mixture(a, z(k, 0)) - log_mixture(b, z(k, 0));
  oracle /= 2000.0;
  const auto est = kl_estimate(a, b, 2000, 3);
  EXPECT_EQ(est.clamped, 0u);
  EXPECT_NEAR(est.raw, oracle, 1e-9 * std::abs(oracle));
}

TEST(Kl, DimensionMismatchErrors) {
  const auto a = adaptive_kde_fit(normal_sample(100, 1, 16));
  const auto b = adaptive_kde_fit(normal_sample(100, 2, 17));
  EXPECT_THROW(kl_estimate(a, b, 10, 1), DiagnosticError);
}

TEST(Tool1, CopiesOfOneSamplePass) {
  const Chain c(normal_sample(2000, 2, 18));
  const auto r = tool1(ChainSet({c, c, c}), 2000);
  EXPECT_EQ(r.max, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Tool1, IndependentSamplesOfOneTargetAreClose) {
  const auto r = tool1(ChainSet({Chain(normal_sample(3000, 1, 19)), Chain(normal_sample(3000, 1, 20))}), 5000, 0.01);
  EXPECT_LT(r.max, 0.01);
  EXPECT_EQ(r.kl(0, 1), r.kl(1, 0));
}

TEST(Tool1, SeparatedSamplesFlagged) {
  const auto r = tool1(ChainSet({Chain(normal_sample(2000, 1, 21)), Chain(normal_sample(2000, 1, 22, 3.0))}), 5000);
  EXPECT_GT(r.max, 1.0);
  EXPECT_FALSE(r.pass);
}

TEST(TileClusters, AllSame) {
  const auto r = tile_clusters(kl_matrix(Matrix::Constant(3, 3, 0.01)), 0.06);
  ASSERT_EQ(r.clusters.size(), 1u);
  EXPECT_EQ(r.clusters[0], (std::vector<std::size_t>{0, 1, 2}));
  for (const auto& row : r.same)
    for (bool s : row) EXPECT_TRUE(s);
}

TEST(TileClusters, OnePairBelowCutoff) {
  Matrix v = Matrix::Constant(4, 4, 5.0);
  v.diagonal().setZero();
  v(0, 1) = v(1, 0) = 0.02;
  const auto r = tile_clusters(kl_matrix(v), 0.06);
  EXPECT_EQ(r.clusters, (std::vector<std::vector<std::size_t>>{{0, 1}, {2}, {3}}));
  EXPECT_TRUE(r.same[0][1]);
  EXPECT_FALSE(r.same[0][2]);
}

TEST(TileClusters, TransitiveComponents) {
  Matrix v = Matrix::Constant(4, 4, 5.0);
  v.diagonal().setZero();
  v(0, 2) = v(2, 0) = 0.0;
  v(2, 3) = v(3, 2) = 0.01;
  const auto r = tile_clusters(kl_matrix(v), 0.06);
  EXPECT_EQ(r.clusters, (std::vector<std::vector<std::size_t>>{{0, 2, 3}, {1}}));
  EXPECT_FALSE(r.same[0][3]);
}

TEST(BoxQuadrature, NormalMass) {
  EXPECT_NEAR(box_quadrature(standard_normal_target(), 400), 1.0, 1e-9);
  EXPECT_THROW(box_quadrature(TargetModel::unbounded("u", 1, [](const Vector&) { return 0.0; }), 10),
               DiagnosticError);
}

TEST(Tool2, IidNormalizedTargetCaptured) {
  const auto r = tool2(Chain(normal_sample(10000, 1, 23)), standard_normal_target());
  EXPECT_NEAR(r.c_star, 1.0, 1e-6);
  EXPECT_LT(r.t2_star, 0.05);
  EXPECT_TRUE(r.captured);
}

TEST(Tool2, ScaleInvariant) {
  const Chain c(normal_sample(3000, 1, 24));
  const auto target = standard_normal_target();
  const auto a = tool2(c, target, 400, 3000, 5);
  const auto b = tool2(c, target.scaled(37.0), 400, 3000, 5);
  EXPECT_NEAR(b.c_hat / a.c_hat, 37.0, 1e-9 * 37.0);
  EXPECT_NEAR(b.c_star / a.c_star, 37.0, 1e-9 * 37.0);
  EXPECT_NEAR(b.t2_star, a.t2_star, 1e-9);
}

TEST(Tool2, DrawsOutsideBoxAreRejected) {
  auto target = standard_normal_target();
  target.lower(0) = -2.0;
  target.upper(0) = 2.0;
  Matrix inside = normal_sample(4000, 1, 28);
  inside = inside.cwiseMax(-1.99).cwiseMin(1.99);
  const auto r = tool2(Chain(inside), target, 400, 4000, 7);
  EXPECT_GT(r.outside_support, 0u);
  EXPECT_EQ(r.clamped, 0u);
  EXPECT_TRUE(std::isfinite(r.t2_star));
}

TEST(Tool2, HalfTheMassMissing) {
  Matrix half = normal_sample(10000, 1, 25).cwiseAbs();
  const auto r = tool2(Chain(half), standard_normal_target());
  EXPECT_NEAR(r.t2_star, 0.5, 0.1);
  EXPECT_FALSE(r.captured);
}
