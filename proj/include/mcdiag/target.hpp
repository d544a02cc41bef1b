#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "mcdiag/chain.hpp"

namespace mcdiag {

/// Unnormalized log-density f on a box (bounds may be infinite).
struct TargetModel {
  std::string name;
  std::size_t dim = 1;
  std::function<double(const Vector&)> log_f;
  /// Optional analytic gradient of log f.
  std::function<Vector(const Vector&)> gradient;
  Vector lower;
  Vector upper;
  std::optional<double> known_c;

  static TargetModel unbounded(std::string name, std::size_t dim, std::function<double(const Vector&)> log_f,
                               std::function<Vector(const Vector&)> grad = {}) {
    const double inf = std::numeric_limits<double>::infinity();
    return {std::move(name), dim, std::move(log_f), std::move(grad),
            Vector::Constant(static_cast<Eigen::Index>(dim), -inf),
            Vector::Constant(static_cast<Eigen::Index>(dim), inf), std::nullopt};
  }

  bool in_support(const Vector& x) const {
    return x.size() == lower.size() && (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
  }

  bool bounded() const { return lower.allFinite() && upper.allFinite(); }

  /// log f(x), or -inf outside the support or where log f is undefined.
  double log_density(const Vector& x) const {
    if (!in_support(x)) return -std::numeric_limits<double>::infinity();
    const double v = log_f(x);
    return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
  }

  /// Same target scaled by a positive constant: log f + log(kappa).
  TargetModel scaled(double kappa) const {
    detail::require(kappa > 0.0, "scale must be positive");
    TargetModel t = *this;
    const double shift = std::log(kappa);
    t.log_f = [f = log_f, shift](const Vector& x) { return f(x) + shift; };
    if (known_c) t.known_c = *known_c * kappa;
    return t;
  }
};

}  // namespace mcdiag
