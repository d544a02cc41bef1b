#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include "mcdiag/chain.hpp"
#include "mcdiag/rng.hpp"
#include "mcdiag/samplers/result.hpp"

namespace mcdiag {

struct ExpIndependenceConfig {
  double theta = 0.5;
  std::size_t n = 1000;
  double x0 = 0.1;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
};

/// Acceptance probability of the Exp(theta) independence proposal y from x, Exp(1) target.
inline double exp_independence_acceptance(double x, double y, double theta) {
  return std::min(1.0, std::exp((theta - 1.0) * (y - x)));
}

/// Independence Metropolis for an Exp(1) target with Exp(theta) proposals.
/// Rows are X_1..X_n; the starting value x0 is not recorded.
inline SamplerResult independence_mh_exp(const ExpIndependenceConfig& config) {
  detail::require(config.theta > 0.0, "theta must be positive");
  detail::require(config.x0 > 0.0, "starting value must be positive");
  detail::require(config.n >= 1, "chain length must be positive");
  Rng rng(config.seed, config.stream);
  Matrix draws(static_cast<Eigen::Index>(config.n), 1);
  double x = config.x0;
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < config.n; ++i) {
    const double y = rng.exponential(config.theta);
    if (std::log(rng.uniform()) < (config.theta - 1.0) * (y - x)) {
      x = y;
      ++accepted;
    }
    draws(static_cast<Eigen::Index>(i), 0) = x;
  }
  return {Chain(std::move(draws), "exp-indep", config.seed),
          static_cast<double>(accepted) / static_cast<double>(config.n)};
}

/// Smallest n with (1 - theta)^n <= delta, from the total-variation bound (1 - theta)^n
/// that holds for theta < 1. Exact equality counts as reaching delta.
inline std::size_t tv_bound_burnin(double theta, double delta) {
  detail::require(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");
  if (!(theta > 0.0 && theta < 1.0))
    throw DiagnosticError("bound unavailable (subgeometric or iid regime)");
  const double steps = std::log(delta) / std::log(1.0 - theta);
  return static_cast<std::size_t>(std::max(1.0, std::ceil(steps - 1e-9)));
}

}  // namespace mcdiag
