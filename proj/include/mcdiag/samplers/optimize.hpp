#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>

#include <Eigen/Dense>

#include "mcdiag/chain.hpp"
#include "mcdiag/target.hpp"

namespace mcdiag {

struct ModeResult {
  Vector point;
  double log_density = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct ModeOptions {
  double gradient_tolerance = 1e-6;
  std::size_t max_iterations = 10000;
};

namespace detail {

inline Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x) {
  Vector g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(j)));
    Vector up = x, down = x;
    up(j) += h;
    down(j) -= h;
    g(j) = (f(up) - f(down)) / (2.0 * h);
  }
  return g;
}

}  // namespace detail

/// BFGS ascent on log f with backtracking (Armijo) line search.
inline ModeResult find_mode(const std::function<double(const Vector&)>& log_f,
                            const std::function<Vector(const Vector&)>& gradient, const Vector& start,
                            const ModeOptions& options = {}) {
  auto grad = [&](const Vector& x) { return gradient ? gradient(x) : detail::numeric_gradient(log_f, x); };
  ModeResult r;
  r.point = start;
  r.log_density = log_f(start);
  detail::require(std::isfinite(r.log_density), "log density is not finite at the starting point");
  Vector g = grad(r.point);
  const auto d = start.size();
  Matrix inv_h = Matrix::Identity(d, d);

  for (r.iterations = 0; r.iterations < options.max_iterations; ++r.iterations) {
    r.gradient_norm = g.norm();
    if (r.gradient_norm < options.gradient_tolerance) {
      r.converged = true;
      return r;
    }
    Vector dir = inv_h * g;
    if (dir.dot(g) <= 0.0) {
      inv_h.setIdentity();
      dir = g;
    }
    double step = 1.0;
    Vector next;
    double next_val = 0.0;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries, step *= 0.5) {
      next = r.point + step * dir;
      next_val = log_f(next);
      if (std::isfinite(next_val) && next_val >= r.log_density + 1e-4 * step * dir.dot(g)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const Vector g_next = grad(next);
    const Vector s = next - r.point;
    const Vector y = g - g_next;  // ascent: curvature of -log f
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      const double rho = 1.0 / sy;
      const Matrix I = Matrix::Identity(d, d);
      inv_h = (I - rho * s * y.transpose()) * inv_h * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    r.point = next;
    r.log_density = next_val;
    g = g_next;
  }
  r.gradient_norm = g.norm();
  r.converged = r.gradient_norm < options.gradient_tolerance;
  return r;
}

inline ModeResult find_mode(const TargetModel& target, const Vector& start, const ModeOptions& options = {}) {
  detail::require(target.in_support(start), "starting point lies outside the target support");
  return find_mode([&](const Vector& x) { return target.log_density(x); }, target.gradient, start, options);
}

}  // namespace mcdiag
