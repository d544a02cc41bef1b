#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mcdiag/chain.hpp"
#include "mcdiag/distributions.hpp"

namespace mcdiag {

struct RlResult {
  double q = 0.0;
  double threshold = 0.0;  // empirical q-quantile u
  std::size_t k = 1;
  /// No thinning up to the search cap preferred the first-order model.
  bool k_capped = false;
  std::size_t burn_in = 0;
  std::size_t run_length = 0;
  std::size_t n_min = 0;
  double dependence_factor = 0.0;
  double alpha01 = 0.0;
  double beta10 = 0.0;

  /// Row-stochastic transition matrix of the thinned indicator chain.
  std::array<std::array<double, 2>, 2> transition() const {
    return {{{1.0 - alpha01, alpha01}, {beta10, 1.0 - beta10}}};
  }
};

/// Iid sample size for estimating P(g <= u) = q to within +/- epsilon with probability s.
inline std::size_t rl_nmin(double q, double epsilon, double s) {
  detail::require(q >= 0.0 && q <= 1.0, "q must lie in [0,1]");
  detail::require(epsilon > 0.0, "epsilon must be positive");
  if (q == 0.0 || q == 1.0) return 0;
  const double z = dist::normal_quantile(0.5 * (1.0 + s));
  return static_cast<std::size_t>(std::ceil(z * z * q * (1.0 - q) / (epsilon * epsilon)));
}

namespace detail {

inline std::vector<int> thin(const std::vector<int>& w, std::size_t k) {
  std::vector<int> out;
  out.reserve(w.size() / k + 1);
  for (std::size_t i = 0; i < w.size(); i += k) out.push_back(w[i]);
  return out;
}

/// BIC of the second-order versus the first-order Markov model; negative prefers first order.
inline double second_order_bic(const std::vector<int>& w) {
  const std::size_t len = w.size();
  if (len < 3) return -1.0;
  double t[2][2][2] = {};
  for (std::size_t i = 2; i < len; ++i) t[w[i - 2]][w[i - 1]][w[i]] += 1.0;
  double g2 = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        if (t[a][b][c] == 0.0) continue;
        const double fitted = (t[a][b][0] + t[a][b][1]) * (t[0][b][c] + t[1][b][c]) /
                              (t[0][b][0] + t[0][b][1] + t[1][b][0] + t[1][b][1]);
        g2 += 2.0 * t[a][b][c] * std::log(t[a][b][c] / fitted);
      }
  return g2 - 2.0 * std::log(static_cast<double>(len - 2));
}

}  // namespace detail

/// Thinning, burn-in and run length for estimating the q-quantile of the series.
inline RlResult raftery_lewis(const ScalarSeries& series, double q, double epsilon, double s,
                              double converge_eps = 0.001) {
  detail::require(q > 0.0 && q < 1.0, "q must lie in (0,1)");
  detail::require(s > 0.0 && s < 1.0, "probability s must lie in (0,1)");
  detail::require(converge_eps > 0.0, "convergence tolerance must be positive");
  RlResult r;
  r.q = q;
  r.n_min = rl_nmin(q, epsilon, s);
  const std::size_t n = series.size();
  detail::require(n >= r.n_min, "Raftery-Lewis needs at least n_min = " + std::to_string(r.n_min) +
                                    " iterations, got " + std::to_string(n));

  r.threshold = quantile(series, q);
  std::vector<int> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = series[i] <= r.threshold ? 1 : 0;

  const std::size_t k_max = std::max<std::size_t>(1, std::min<std::size_t>(n / 50, 50));
  std::vector<int> thinned;
  r.k_capped = true;
  for (std::size_t k = 1; k <= k_max; ++k) {
    thinned = detail::thin(w, k);
    r.k = k;
    if (detail::second_order_bic(thinned) < 0.0) {
      r.k_capped = false;
      break;
    }
  }

  double counts[2][2] = {};
  for (std::size_t i = 1; i < thinned.size(); ++i) counts[thinned[i - 1]][thinned[i]] += 1.0;
  const double from0 = counts[0][0] + counts[0][1];
  const double from1 = counts[1][0] + counts[1][1];
  r.alpha01 = from0 > 0.0 ? counts[0][1] / from0 : 0.0;
  r.beta10 = from1 > 0.0 ? counts[1][0] / from1 : 0.0;
  const double a = r.alpha01, b = r.beta10;
  detail::require(a + b > 0.0, "degenerate binary process: chain never crosses the quantile");

  const double k = static_cast<double>(r.k);
  const double lambda = std::abs(1.0 - a - b);
  // Second eigenvalue 0 means one step mixes; 1 means a periodic chain. Both short-circuit to k.
  if (lambda < 1e-12 || lambda > 1.0 - 1e-12) {
    r.burn_in = r.k;
  } else {
    const double steps = std::log(converge_eps * (a + b) / std::max(a, b)) / std::log(lambda);
    r.burn_in = static_cast<std::size_t>(std::max(1.0, std::ceil(steps))) * r.k;
  }
  const double z = dist::normal_quantile(0.5 * (1.0 + s));
  const double run = (2.0 - a - b) * a * b / std::pow(a + b, 3) * (z / epsilon) * (z / epsilon);
  r.run_length = static_cast<std::size_t>(std::ceil(run * k));
  r.dependence_factor = static_cast<double>(r.burn_in + r.run_length) / static_cast<double>(r.n_min);
  return r;
}

}  // namespace mcdiag
