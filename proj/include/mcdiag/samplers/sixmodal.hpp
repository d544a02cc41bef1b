#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "mcdiag/chain.hpp"
#include "mcdiag/rng.hpp"
#include "mcdiag/samplers/optimize.hpp"
#include "mcdiag/samplers/result.hpp"
#include "mcdiag/target.hpp"

namespace mcdiag {

inline constexpr double kSixmodalBound = 10.0;

/// log f(x, y) = -x^2/2 - ((csc y)^5 - x)^2/2 on [-10, 10]^2; -inf outside or at csc poles.
inline double sixmodal_logdensity(double x, double y) {
  constexpr double ninf = -std::numeric_limits<double>::infinity();
  if (std::abs(x) > kSixmodalBound || std::abs(y) > kSixmodalBound) return ninf;
  const double s = std::sin(y);
  if (s == 0.0) return ninf;
  const double c = std::pow(1.0 / s, 5);
  if (!std::isfinite(c)) return ninf;
  const double r = c - x;
  const double v = -0.5 * x * x - 0.5 * r * r;
  return std::isfinite(v) ? v : ninf;
}

inline Vector sixmodal_gradient(double x, double y) {
  const double s = std::sin(y);
  const double c = std::pow(1.0 / s, 5);
  const double dc = -5.0 * std::pow(1.0 / s, 6) * std::cos(y);
  Vector g(2);
  g << c - 2.0 * x, -(c - x) * dc;
  return g;
}

inline TargetModel sixmodal_target() {
  TargetModel t;
  t.name = "sixmodal";
  t.dim = 2;
  t.log_f = [](const Vector& v) { return sixmodal_logdensity(v(0), v(1)); };
  t.gradient = [](const Vector& v) { return sixmodal_gradient(v(0), v(1)); };
  t.lower = Vector::Constant(2, -kSixmodalBound);
  t.upper = Vector::Constant(2, kSixmodalBound);
  return t;
}

struct SixmodalConfig {
  std::size_t n = 30000;
  double x0 = 0.5;
  double y0 = 1.5707963267948966;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  double scale_x = 1.0;
  double scale_y = 0.25;
};

/// Metropolis-within-Gibbs: random-walk update of x given y, then of y given x.
/// Proposals leaving the box are rejected. Acceptance rate averages both updates.
inline SamplerResult sixmodal_mwg(const SixmodalConfig& config) {
  detail::require(config.n >= 1, "chain length must be positive");
  detail::require(config.scale_x > 0.0 && config.scale_y > 0.0, "proposal scales must be positive");
  double x = config.x0, y = config.y0;
  double current = sixmodal_logdensity(x, y);
  detail::require(std::isfinite(current), "initial state must lie inside the support");
  Rng rng(config.seed, config.stream);
  Matrix draws(static_cast<Eigen::Index>(config.n), 2);
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < config.n; ++i) {
    const double xp = x + config.scale_x * rng.normal();
    const double lx = sixmodal_logdensity(xp, y);
    if (std::log(rng.uniform()) < lx - current) {
      x = xp;
      current = lx;
      ++accepted;
    }
    const double yp = y + config.scale_y * rng.normal();
    const double ly = sixmodal_logdensity(x, yp);
    if (std::log(rng.uniform()) < ly - current) {
      y = yp;
      current = ly;
      ++accepted;
    }
    draws(static_cast<Eigen::Index>(i), 0) = x;
    draws(static_cast<Eigen::Index>(i), 1) = y;
  }
  return {Chain(std::move(draws), "sixmodal", config.seed),
          static_cast<double>(accepted) / (2.0 * static_cast<double>(config.n))};
}

/// Local modes found by gradient ascent from a coarse grid of starting points, sorted by y.
inline std::vector<Vector> sixmodal_modes() {
  const auto target = sixmodal_target();
  std::vector<Vector> modes;
  for (double y = -9.75; y <= 9.75; y += 0.5) {
    for (double x : {-0.5, 0.5}) {
      Vector start(2);
      start << x, y;
      if (!(target.log_density(start) > -50.0)) continue;
      const auto r = find_mode(target, start);
      if (!r.converged) continue;
      const bool seen = std::any_of(modes.begin(), modes.end(),
                                    [&](const Vector& m) { return (m - r.point).norm() < 1e-4; });
      if (!seen) modes.push_back(r.point);
    }
  }
  std::sort(modes.begin(), modes.end(), [](const Vector& a, const Vector& b) { return a(1) < b(1); });
  return modes;
}

}  // namespace mcdiag
