#pragma once

#include <cmath>
#include <cstddef>

#include "mcdiag/chain.hpp"
#include "mcdiag/variance.hpp"

namespace mcdiag {

struct GewekeResult {
  double z = 0.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double s0_a = 0.0;  // spectral density at zero, first segment
  double s0_b = 0.0;  // spectral density at zero, last segment
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

/// Z-score comparing the mean of the first frac_a of the series with the last frac_b.
inline GewekeResult geweke(const ScalarSeries& series, double frac_a = 0.1, double frac_b = 0.5) {
  detail::require(frac_a > 0.0 && frac_b > 0.0 && frac_a + frac_b <= 1.0,
                  "Geweke segments overlap (frac_a + frac_b > 1)");
  const std::size_t n = series.size();
  GewekeResult r;
  r.n_a = static_cast<std::size_t>(std::floor(frac_a * static_cast<double>(n)));
  r.n_b = static_cast<std::size_t>(std::floor(frac_b * static_cast<double>(n)));
  detail::require(r.n_a >= 10 && r.n_b >= 10, "Geweke segments need at least 10 values each");

  const auto a = series.slice(0, r.n_a);
  const auto b = series.slice(n - r.n_b, r.n_b);
  r.mean_a = detail::sequential_mean(a.values);
  r.mean_b = detail::sequential_mean(b.values);
  r.s0_a = spectral_var_zero(a).sigma2;
  r.s0_b = spectral_var_zero(b).sigma2;
  r.z = (r.mean_a - r.mean_b) /
        std::sqrt(r.s0_a / static_cast<double>(r.n_a) + r.s0_b / static_cast<double>(r.n_b));
  return r;
}

}  // namespace mcdiag
