#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcdiag/chain.hpp"
#include "mcdiag/distributions.hpp"
#include "mcdiag/variance.hpp"

namespace mcdiag {

enum class StoppingRule {
  Fwsr,
  RelativeMagnitude,
  RelativeSd,
  FixedVolume,
  MultivariateRelativeSd,
  MessThreshold,
};

inline const char* to_string(StoppingRule r) {
  switch (r) {
    case StoppingRule::Fwsr: return "fwsr";
    case StoppingRule::RelativeMagnitude: return "relative-magnitude";
    case StoppingRule::RelativeSd: return "relative-sd";
    case StoppingRule::FixedVolume: return "fixed-volume";
    case StoppingRule::MultivariateRelativeSd: return "multivariate-relative-sd";
    case StoppingRule::MessThreshold: return "mess";
  }
  return "?";
}

inline std::optional<StoppingRule> parse_stopping_rule(const std::string& name) {
  for (auto r : {StoppingRule::Fwsr, StoppingRule::RelativeMagnitude, StoppingRule::RelativeSd,
                 StoppingRule::FixedVolume, StoppingRule::MultivariateRelativeSd,
                 StoppingRule::MessThreshold})
    if (name == to_string(r)) return r;
  if (name == "mess-threshold") return StoppingRule::MessThreshold;
  return std::nullopt;
}

inline bool is_multivariate(StoppingRule r) {
  return r == StoppingRule::FixedVolume || r == StoppingRule::MultivariateRelativeSd ||
         r == StoppingRule::MessThreshold;
}

/// Which quantile plays the role of t* in half-widths.
enum class Critical { Normal, StudentT };

struct StoppingConfig {
  double epsilon = 0.01;
  double alpha = 0.05;
  std::size_t min_n = 10000;
  /// Unset means ceil(chain length / 100).
  std::optional<std::size_t> check_interval;
  StoppingRule rule = StoppingRule::Fwsr;
  Critical critical = Critical::Normal;
  /// Include the 1/n term on the left-hand side of the width and volume rules.
  bool add_inverse_n = true;

  void validate() const {
    detail::require(epsilon > 0.0, "epsilon must be positive");
    detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
    detail::require(min_n >= 2, "minimum iterations must be at least 2");
    detail::require(!check_interval || *check_interval >= 1, "check interval must be positive");
  }

  std::size_t interval_for(std::size_t length) const {
    return check_interval.value_or((length + 99) / 100);
  }
};

struct StoppingVerdict {
  bool stop = false;
  std::size_t n = 0;
  double statistic = 0.0;
  double threshold = 0.0;
  std::optional<double> half_width;
  std::optional<double> ess;
  /// Zero variance or zero scale made the rule trivially decided.
  bool degenerate = false;
  StoppingRule rule = StoppingRule::Fwsr;
};

struct ConfidenceInterval {
  double center = 0.0;
  double half_width = 0.0;
};

struct ConfidenceRegion {
  Vector center;
  Matrix shape;
  double radius2 = 0.0;
  double volume = 0.0;
};

/// Univariate effective sample size n * lambda^2 / sigma^2.
inline double ess(const ScalarSeries& series, const VarianceEstimate& var) {
  detail::require(var.sigma2 > 0.0, "ESS undefined for zero long-run variance");
  return static_cast<double>(series.size()) * var.lambda2 / var.sigma2;
}

namespace detail {

inline double log_det_spd(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  require(llt.info() == Eigen::Success, std::string(what) + " is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

inline void require_nonsingular(const CovarianceEstimate& cov) {
  require(!cov.sigma_singular, "long-run covariance estimate is singular");
  require(!cov.lambda_singular, "sample covariance is singular");
}

inline Vector column_means(const Chain& chain) {
  Vector m(static_cast<Eigen::Index>(chain.dim()));
  for (Eigen::Index j = 0; j < m.size(); ++j) m(j) = sequential_mean(chain.draws().col(j));
  return m;
}

/// log of 2 pi^{p/2} / (p Gamma(p/2)), the unit-ball volume in R^p.
inline double log_unit_ball_volume(std::size_t p) {
  const double dp = static_cast<double>(p);
  return std::log(2.0) + 0.5 * dp * std::log(std::numbers::pi) - std::log(dp) - dist::lgamma(0.5 * dp);
}

}  // namespace detail

/// Multivariate ESS n (|Lambda| / |Sigma|)^{1/p}.
inline double mess(const Chain& chain, const CovarianceEstimate& cov) {
  detail::require(cov.dim() == chain.dim(), "covariance dimension does not match chain");
  detail::require_nonsingular(cov);
  const double p = static_cast<double>(chain.dim());
  const double log_ratio = detail::log_det_spd(cov.lambda, "sample covariance") -
                           detail::log_det_spd(cov.sigma, "long-run covariance");
  return static_cast<double>(chain.size()) * std::exp(log_ratio / p);
}

/// Minimum mESS for a 100(1-alpha)% region of relative volume epsilon.
inline double mess_threshold(std::size_t p, double alpha, double epsilon) {
  detail::require(p >= 1, "dimension must be positive");
  detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
  detail::require(epsilon > 0.0, "epsilon must be positive");
  const double dp = static_cast<double>(p);
  const double log_coef = (2.0 / dp) * std::log(2.0) + std::log(std::numbers::pi) -
                          (2.0 / dp) * (std::log(dp) + dist::lgamma(0.5 * dp));
  return std::exp(log_coef) * dist::chi2_quantile(1.0 - alpha, dp) / (epsilon * epsilon);
}

/// t* for a given level; the Student-t variant uses (batches - 1) degrees of freedom.
inline double critical_value(double alpha, Critical critical, std::size_t batches) {
  if (critical == Critical::StudentT) {
    detail::require(batches >= 2, "Student-t critical value needs at least 2 batches");
    return dist::student_t_quantile(1.0 - alpha / 2.0, static_cast<double>(batches - 1));
  }
  return dist::z_critical(alpha);
}

inline ConfidenceInterval confidence_interval(const ScalarSeries& series, const VarianceEstimate& var,
                                              double alpha, Critical critical = Critical::Normal) {
  detail::require(var.sigma2 >= 0.0, "negative variance estimate");
  const double t = critical_value(alpha, critical, var.batches);
  return {detail::sequential_mean(series.values),
          t * std::sqrt(var.sigma2) / std::sqrt(static_cast<double>(series.size()))};
}

/// Ellipsoid n (g - theta)' Sigma^{-1} (g - theta) <= chi2_{1-alpha,p}.
inline ConfidenceRegion confidence_region(const Chain& chain, const CovarianceEstimate& cov, double alpha) {
  detail::require(cov.dim() == chain.dim(), "covariance dimension does not match chain");
  detail::require(!cov.sigma_singular, "long-run covariance estimate is singular");
  const std::size_t p = chain.dim();
  const double n = static_cast<double>(chain.size());
  ConfidenceRegion region;
  region.center = detail::column_means(chain);
  region.shape = cov.sigma / n;
  region.radius2 = dist::chi2_quantile(1.0 - alpha, static_cast<double>(p));
  const double log_vol = detail::log_unit_ball_volume(p) +
                         0.5 * static_cast<double>(p) * std::log(region.radius2 / n) +
                         0.5 * detail::log_det_spd(cov.sigma, "long-run covariance");
  region.volume = std::exp(log_vol);
  return region;
}

namespace detail {

inline StoppingVerdict width_verdict(const ScalarSeries& series, const VarianceEstimate& var,
                                     const StoppingConfig& config, double rhs) {
  config.validate();
  StoppingVerdict v;
  v.n = series.size();
  const auto ci = confidence_interval(series, var, config.alpha, config.critical);
  v.half_width = ci.half_width;
  v.statistic = ci.half_width + (config.add_inverse_n ? 1.0 / static_cast<double>(v.n) : 0.0);
  v.threshold = rhs;
  v.degenerate = var.degenerate;
  v.stop = v.n >= config.min_n && v.statistic <= v.threshold;
  return v;
}

}  // namespace detail

/// Absolute fixed-width rule: t* sigma / sqrt(n) + 1/n <= epsilon.
inline StoppingVerdict fwsr_check(const ScalarSeries& series, const VarianceEstimate& var,
                                  const StoppingConfig& config) {
  auto v = detail::width_verdict(series, var, config, config.epsilon);
  v.rule = StoppingRule::Fwsr;
  return v;
}

enum class RelativeVariant { Magnitude, Sd };

/// Relative rules: right-hand side epsilon |mean| or epsilon * lambda.
inline StoppingVerdict relative_fwsr_check(const ScalarSeries& series, const VarianceEstimate& var,
                                           const StoppingConfig& config, RelativeVariant variant) {
  double rhs = 0.0;
  bool degenerate = false;
  if (variant == RelativeVariant::Magnitude) {
    const double mean = detail::sequential_mean(series.values);
    detail::require(mean != 0.0, "relative target undefined: sample mean is zero");
    rhs = config.epsilon * std::abs(mean);
  } else {
    const double lambda = std::sqrt(var.lambda2);
    degenerate = lambda == 0.0;
    rhs = config.epsilon * lambda;
  }
  auto v = detail::width_verdict(series, var, config, rhs);
  v.degenerate = v.degenerate || degenerate;
  v.rule = variant == RelativeVariant::Magnitude ? StoppingRule::RelativeMagnitude : StoppingRule::RelativeSd;
  return v;
}

/// Fixed-volume rule: Vol^{1/p} + 1/n <= epsilon.
inline StoppingVerdict fixed_volume_check(const Chain& chain, const CovarianceEstimate& cov,
                                          const StoppingConfig& config) {
  config.validate();
  const auto region = confidence_region(chain, cov, config.alpha);
  StoppingVerdict v;
  v.rule = StoppingRule::FixedVolume;
  v.n = chain.size();
  v.statistic = std::pow(region.volume, 1.0 / static_cast<double>(chain.dim())) +
                (config.add_inverse_n ? 1.0 / static_cast<double>(v.n) : 0.0);
  v.threshold = config.epsilon;
  v.stop = v.n >= config.min_n && v.statistic <= v.threshold;
  return v;
}

/// Multivariate relative-SD rule: Vol^{1/p} + 1/n <= epsilon |Lambda|^{1/(2p)}.
inline StoppingVerdict multivariate_relsd_check(const Chain& chain, const CovarianceEstimate& cov,
                                                const StoppingConfig& config) {
  config.validate();
  detail::require_nonsingular(cov);
  const double p = static_cast<double>(chain.dim());
  const auto region = confidence_region(chain, cov, config.alpha);
  StoppingVerdict v;
  v.rule = StoppingRule::MultivariateRelativeSd;
  v.n = chain.size();
  v.statistic = std::pow(region.volume, 1.0 / p) + (config.add_inverse_n ? 1.0 / static_cast<double>(v.n) : 0.0);
  v.threshold = config.epsilon * std::exp(detail::log_det_spd(cov.lambda, "sample covariance") / (2.0 * p));
  v.ess = mess(chain, cov);
  v.stop = v.n >= config.min_n && v.statistic <= v.threshold;
  return v;
}

/// mESS rule: stop once mESS >= mess_threshold(p, alpha, epsilon); equality stops.
inline StoppingVerdict mess_rule_check(const Chain& chain, const CovarianceEstimate& cov,
                                       const StoppingConfig& config) {
  config.validate();
  StoppingVerdict v;
  v.rule = StoppingRule::MessThreshold;
  v.n = chain.size();
  v.statistic = mess(chain, cov);
  v.ess = v.statistic;
  v.threshold = mess_threshold(chain.dim(), config.alpha, config.epsilon);
  v.stop = v.n >= config.min_n && v.statistic >= v.threshold;
  return v;
}

/// Pilot-based run length: ceil(pilot_n (pilot_hw / target_hw)^2).
inline std::size_t sample_size_projection(std::size_t pilot_n, double pilot_half_width,
                                          double target_half_width) {
  detail::require(pilot_n >= 1 && pilot_half_width > 0.0 && target_half_width > 0.0,
                  "sample size projection needs positive inputs");
  const double ratio = pilot_half_width / target_half_width;
  const double exact = static_cast<double>(pilot_n) * ratio * ratio;
  // Decimal inputs such as 0.112 / 0.01 carry representation error of a few ulps.
  return static_cast<std::size_t>(std::ceil(exact * (1.0 - 1e-12)));
}

/// One evaluation of a rule on a chain prefix. Univariate rules yield one verdict per
/// coordinate and stop only when every coordinate does.
struct Checkpoint {
  std::size_t n = 0;
  bool stop = false;
  std::vector<StoppingVerdict> verdicts;
  std::string error;
};

inline Checkpoint evaluate_stopping_rule(const Chain& chain, const StoppingConfig& config) {
  config.validate();
  Checkpoint cp;
  cp.n = chain.size();
  if (is_multivariate(config.rule)) {
    const auto cov = multivariate_batch_means(chain);
    if (cov.batches <= chain.dim())
      throw DiagnosticError("rule/dimension mismatch: " + std::to_string(cov.batches) + " batches for p=" +
                            std::to_string(chain.dim()));
    switch (config.rule) {
      case StoppingRule::FixedVolume: cp.verdicts.push_back(fixed_volume_check(chain, cov, config)); break;
      case StoppingRule::MultivariateRelativeSd:
        cp.verdicts.push_back(multivariate_relsd_check(chain, cov, config));
        break;
      default: cp.verdicts.push_back(mess_rule_check(chain, cov, config)); break;
    }
  } else {
    for (std::size_t j = 0; j < chain.dim(); ++j) {
      const auto series = apply_function(chain, FunctionSpec::coordinate(j + 1));
      const auto var = batch_means_var(series);
      switch (config.rule) {
        case StoppingRule::RelativeMagnitude:
          cp.verdicts.push_back(relative_fwsr_check(series, var, config, RelativeVariant::Magnitude));
          break;
        case StoppingRule::RelativeSd:
          cp.verdicts.push_back(relative_fwsr_check(series, var, config, RelativeVariant::Sd));
          break;
        default: cp.verdicts.push_back(fwsr_check(series, var, config)); break;
      }
    }
  }
  cp.stop = std::all_of(cp.verdicts.begin(), cp.verdicts.end(), [](const auto& v) { return v.stop; });
  return cp;
}

struct StoppingRun {
  std::vector<Checkpoint> trajectory;
  /// Index into `trajectory` of the first stopping prefix.
  std::optional<std::size_t> first_stop;

  const Checkpoint* stopped() const { return first_stop ? &trajectory[*first_stop] : nullptr; }
};

/// Prefix lengths checked: multiples of the interval, plus the minimum n itself.
inline std::vector<std::size_t> checkpoints(std::size_t length, const StoppingConfig& config) {
  const std::size_t step = config.interval_for(length);
  std::vector<std::size_t> out;
  for (std::size_t n = step; n <= length; n += step) {
    if (n > config.min_n && (out.empty() || out.back() < config.min_n) && config.min_n <= length)
      out.push_back(config.min_n);
    out.push_back(n);
  }
  return out;
}

/// Evaluates the rule on growing prefixes; prefixes below the minimum n are recorded but never stop.
/// With halt_on_stop the scan ends at the first stopping prefix.
inline StoppingRun run_stopping_rule(const Chain& chain, const StoppingConfig& config, bool halt_on_stop = true) {
  config.validate();
  StoppingRun run;
  for (std::size_t n : checkpoints(chain.size(), config)) {
    Checkpoint cp;
    try {
      cp = evaluate_stopping_rule(chain.prefix(n), config);
    } catch (const DiagnosticError& e) {
      cp.n = n;
      cp.error = e.what();
    }
    run.trajectory.push_back(std::move(cp));
    if (run.trajectory.back().stop && !run.first_stop) {
      run.first_stop = run.trajectory.size() - 1;
      if (halt_on_stop) break;
    }
  }
  return run;
}

}  // namespace mcdiag
