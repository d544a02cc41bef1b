#pragma once

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "mcdiag/error.hpp"

// Thin wrappers over Boost.Math so call sites read in terms of levels, not distribution objects.
namespace mcdiag::dist {

inline double normal_quantile(double p) {
  detail::require(p > 0.0 && p < 1.0, "normal quantile level must lie in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

inline double normal_cdf(double x) {
  return boost::math::cdf(boost::math::normal_distribution<double>(), x);
}

/// Two-sided critical value z_{alpha/2}.
inline double z_critical(double alpha) { return normal_quantile(1.0 - alpha / 2.0); }

inline double chi2_quantile(double p, double dof) {
  detail::require(p > 0.0 && p < 1.0, "chi-squared quantile level must lie in (0,1)");
  detail::require(dof > 0.0, "chi-squared degrees of freedom must be positive");
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), p);
}

inline double student_t_quantile(double p, double dof) {
  detail::require(p > 0.0 && p < 1.0, "t quantile level must lie in (0,1)");
  detail::require(dof > 0.0, "t degrees of freedom must be positive");
  return boost::math::quantile(boost::math::students_t_distribution<double>(dof), p);
}

inline double lgamma(double x) { return boost::math::lgamma(x); }

}  // namespace mcdiag::dist
