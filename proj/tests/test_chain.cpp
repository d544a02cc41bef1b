#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "mcdiag/chain.hpp"
#include "mcdiag/rng.hpp"

using namespace mcdiag;

namespace {

Chain two_column(std::size_t n) {
  Matrix m(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    m(i, 0) = static_cast<double>(i);
    m(i, 1) = -2.0 * static_cast<double>(i);
  }
  return Chain(m, "c");
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal() * 3.0 + 1.0;
  return v;
}

}  // namespace

TEST(Chain, RejectsNonFiniteAndEmpty) {
  Matrix m(2, 1);
  m << 1.0, std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(Chain{m}, DiagnosticError);
  EXPECT_THROW(Chain{Matrix(0, 1)}, DiagnosticError);
  EXPECT_THROW(Chain{Matrix(3, 0)}, DiagnosticError);
}

TEST(Chain, SliceAndBurnin) {
  const auto c = two_column(10);
  const auto s = c.drop_burnin(3);
  EXPECT_EQ(s.size(), 7u);
  EXPECT_EQ(s.draws()(0, 0), 3.0);
  EXPECT_EQ(s.id(), "c");
  EXPECT_THROW(c.drop_burnin(10), DiagnosticError);
  EXPECT_THROW(c.slice(5, 6), DiagnosticError);
  EXPECT_EQ(c.prefix(4).size(), 4u);
}

TEST(Chain, SelectColumns) {
  const auto c = two_column(5);
  const auto s = c.select({1});
  EXPECT_EQ(s.dim(), 1u);
  EXPECT_EQ(s.draws()(2, 0), -4.0);
  EXPECT_THROW(c.select({2}), DiagnosticError);
}

TEST(ChainSet, RequiresCommonDimension) {
  EXPECT_THROW(ChainSet({two_column(5), Chain::from_values({1, 2, 3})}), DiagnosticError);
  ChainSet set({two_column(5), two_column(6)});
  EXPECT_FALSE(set.equal_lengths());
  EXPECT_THROW(set.common_length(), DiagnosticError);
  EXPECT_EQ(set.prefix(5).common_length(), 5u);
}

TEST(ApplyFunction, CoordinateOfOneDimChainIsIdentity) {
  const auto c = Chain::from_values({3, 1, 4, 1, 5});
  const auto s = apply_function(c, FunctionSpec::coordinate(1));
  EXPECT_EQ(s.values, c.draws().col(0));
}

TEST(ApplyFunction, IndicatorThresholds) {
  const auto c = Chain::from_values({1, 2, 3, 4});
  const auto s = apply_function(c, FunctionSpec::indicator(2.5));
  EXPECT_EQ(std::vector<double>(s.values.begin(), s.values.end()), (std::vector<double>{1, 1, 0, 0}));
}

TEST(ApplyFunction, CoordinateOutOfRange) {
  EXPECT_THROW(apply_function(two_column(3), FunctionSpec::coordinate(3)), DiagnosticError);
  EXPECT_THROW(apply_function(two_column(3), FunctionSpec::coordinate(0)), DiagnosticError);
}

TEST(ApplyFunction, UserFunction) {
  const auto f = FunctionSpec::user("sum", [](const RowView& r) { return r.sum(); });
  const auto s = apply_function(two_column(4), f);
  EXPECT_EQ(s[3], 3.0 - 6.0);
}

TEST(RunningMean, HandExamples) {
  EXPECT_EQ(running_mean(ScalarSeries::from({2, 2, 2})), (std::vector<double>{2, 2, 2}));
  EXPECT_EQ(running_mean(ScalarSeries::from({1, 2, 3})), (std::vector<double>{1, 1.5, 2}));
}

TEST(RunningMean, LastEqualsSummaryMean) {
  const auto v = random_values(5000, 11);
  const auto s = ScalarSeries::from(v);
  long double oracle = 0.0L;
  for (double x : v) oracle += x;
  oracle /= static_cast<long double>(v.size());
  const auto rm = running_mean(s);
  EXPECT_NEAR(rm.back(), static_cast<double>(oracle), 1e-12);
  EXPECT_NEAR(rm.back(), summarize(s).mean, 1e-12);
}

TEST(RunningMean, TranslationEquivariant) {
  const auto v = random_values(200, 3);
  auto shifted = v;
  for (auto& x : shifted) x += 7.5;
  const auto a = running_mean(ScalarSeries::from(v));
  const auto b = running_mean(ScalarSeries::from(shifted));
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(b[k], a[k] + 7.5, 1e-12);
}

TEST(Summarize, HandExamples) {
  const auto s = summarize(ScalarSeries::from({1, 2, 3}));
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_DOUBLE_EQ(s.variance, 1.0);
  EXPECT_EQ(summarize(ScalarSeries::from({4, 4, 4, 4})).variance, 0.0);
  EXPECT_THROW(summarize(ScalarSeries::from({1})), DiagnosticError);
}

TEST(Summarize, VarianceAffineBehaviour) {
  const auto v = random_values(500, 5);
  std::vector<double> w(v.size());
  std::transform(v.begin(), v.end(), w.begin(), [](double x) { return -3.0 * x + 100.0; });
  const double a = summarize(ScalarSeries::from(v)).variance;
  const double b = summarize(ScalarSeries::from(w)).variance;
  EXPECT_NEAR(b, 9.0 * a, 1e-9 * b);
}

TEST(Quantile, MiddleOrderStatistic) {
  std::vector<double> v(101);
  std::iota(v.begin(), v.end(), 1.0);
  std::reverse(v.begin(), v.end());
  EXPECT_EQ(quantile(ScalarSeries::from(v), 0.5), 51.0);
}

TEST(Quantile, LinearInterpolationBetweenRanks) {
  // Type-7: h = (n-1) q; {10,20,30,40} at q=0.5 -> h=1.5 -> 25; at q=0.1 -> h=0.3 -> 13.
  const auto s = ScalarSeries::from({40, 10, 30, 20});
  EXPECT_DOUBLE_EQ(quantile(s, 0.5), 25.0);
  EXPECT_DOUBLE_EQ(quantile(s, 0.1), 13.0);
  EXPECT_DOUBLE_EQ(quantile(s, 0.0), 10.0);
  EXPECT_DOUBLE_EQ(quantile(s, 1.0), 40.0);
}
