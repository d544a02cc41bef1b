#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "mcdiag/chain.hpp"
#include "mcdiag/variance.hpp"

namespace mcdiag {

/// Asymptotic CDF of the Cramer-von Mises statistic (integral of a squared Brownian bridge).
inline double cramer_von_mises_cdf(double x) {
  if (x <= 0.0) return 0.0;
  constexpr double log_eps = -36.0;
  double sum = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double u = (4.0 * k + 1.0) * (4.0 * k + 1.0) / (16.0 * x);
    if (-u < log_eps) break;
    const double coef = std::exp(boost::math::lgamma(k + 0.5) - boost::math::lgamma(k + 1.0)) *
                        std::sqrt(4.0 * k + 1.0) / (std::pow(std::numbers::pi, 1.5) * std::sqrt(x));
    sum += coef * std::exp(-u) * boost::math::cyl_bessel_k(0.25, u);
  }
  return std::min(1.0, sum);
}

/// Scaled partial-sum process B_n(j/n), j = 1..n, with S(0) from the given estimate.
inline std::vector<double> brownian_bridge(const ScalarSeries& series, double s0) {
  const std::size_t n = series.size();
  const double mean = detail::sequential_mean(series.values);
  const double scale = std::sqrt(static_cast<double>(n) * s0);
  std::vector<double> bridge(n);
  double cum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    cum += series[j];
    bridge[j] = (cum - static_cast<double>(j + 1) * mean) / scale;
  }
  return bridge;
}

struct HwResult {
  bool pass = false;
  /// Fraction discarded from the front when the test passed, or the last one tried.
  double discard_fraction = 0.0;
  double cvm_statistic = 0.0;
  double p_value = 0.0;
  std::size_t start = 0;
};

/// Stationarity test with successive 10% front discards, giving up after 50%.
inline HwResult heidelberger_welch(const ScalarSeries& series, double level = 0.05) {
  const std::size_t n = series.size();
  detail::require(n >= 50, "Heidelberger-Welch needs at least 50 iterations");
  HwResult r;
  for (int step = 0; step <= 5; ++step) {
    const std::size_t start = static_cast<std::size_t>(step) * n / 10;
    const auto window = series.slice(start, n - start);
    const double s0 = spectral_var_zero(window).sigma2;
    const auto bridge = brownian_bridge(window, s0);
    double ss = 0.0;
    for (double b : bridge) ss += b * b;
    r.cvm_statistic = ss / static_cast<double>(bridge.size());
    r.p_value = 1.0 - cramer_von_mises_cdf(r.cvm_statistic);
    r.discard_fraction = step / 10.0;
    r.start = start;
    if (r.p_value > level) {
      r.pass = true;
      break;
    }
  }
  return r;
}

}  // namespace mcdiag
