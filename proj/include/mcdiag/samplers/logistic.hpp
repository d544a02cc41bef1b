#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>

#include <Eigen/Dense>

#include "mcdiag/chain.hpp"
#include "mcdiag/rng.hpp"
#include "mcdiag/samplers/optimize.hpp"
#include "mcdiag/samplers/result.hpp"

namespace mcdiag {

/// Binary responses with a design matrix whose first column is the intercept.
struct LogisticData {
  Matrix design;
  Vector response;

  std::size_t observations() const noexcept { return static_cast<std::size_t>(design.rows()); }
  std::size_t covariates() const noexcept { return static_cast<std::size_t>(design.cols()); }

  void validate() const {
    detail::require(design.rows() == response.size(), "design and response lengths differ");
    detail::require(design.cols() >= 1, "design needs at least one column");
    detail::require(design.allFinite(), "design contains non-finite values");
    detail::require(((response.array() == 0.0) || (response.array() == 1.0)).all(), "responses must be 0/1");
  }
};

struct LogPosterior {
  double value = 0.0;
  Vector gradient;
};

namespace detail {

/// log(1 + exp(t)) without overflow.
inline double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

inline double logistic_cdf(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

}  // namespace detail

/// Log-likelihood plus N(0, prior_sd^2 I) log-prior, with its analytic gradient.
inline LogPosterior logistic_log_posterior(const Vector& beta, const LogisticData& data, double prior_sd = 10.0) {
  detail::require(static_cast<std::size_t>(beta.size()) == data.covariates(),
                  "coefficient vector does not match the design");
  detail::require(prior_sd > 0.0, "prior standard deviation must be positive");
  const Vector eta = data.design * beta;
  Vector resid(eta.size());
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    ll += data.response(i) * eta(i) - detail::softplus(eta(i));
    resid(i) = data.response(i) - detail::logistic_cdf(eta(i));
  }
  const double prior_var = prior_sd * prior_sd;
  const double d = static_cast<double>(beta.size());
  const double log_prior = -0.5 * beta.squaredNorm() / prior_var - 0.5 * d * std::log(2.0 * std::numbers::pi * prior_var);
  return {ll + log_prior, data.design.transpose() * resid - beta / prior_var};
}

/// Hessian of the log posterior: -X' W X - I / prior_sd^2.
inline Matrix logistic_log_posterior_hessian(const Vector& beta, const LogisticData& data, double prior_sd = 10.0) {
  const Vector eta = data.design * beta;
  Vector w(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double p = detail::logistic_cdf(eta(i));
    w(i) = p * (1.0 - p);
  }
  const auto d = data.design.cols();
  return -(data.design.transpose() * w.asDiagonal() * data.design) -
         Matrix::Identity(d, d) / (prior_sd * prior_sd);
}

/// Intercept plus iid N(0,1) covariates; y_i ~ Bernoulli(F(x_i' beta)).
inline LogisticData synth_logistic_data(std::size_t observations, const Vector& beta_true, std::uint64_t seed) {
  detail::require(observations >= 1, "need at least one observation");
  detail::require(beta_true.size() >= 1, "need at least the intercept");
  Rng rng(seed, 0xDA7A);
  LogisticData data;
  const auto n = static_cast<Eigen::Index>(observations);
  data.design.resize(n, beta_true.size());
  data.response.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.design(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < beta_true.size(); ++j) data.design(i, j) = rng.normal();
    const double p = detail::logistic_cdf(data.design.row(i).dot(beta_true));
    data.response(i) = rng.uniform() < p ? 1.0 : 0.0;
  }
  return data;
}

inline ModeResult find_logistic_mode(const LogisticData& data, double prior_sd = 10.0,
                                     std::optional<Vector> start = std::nullopt) {
  const Vector x0 = start.value_or(Vector::Zero(static_cast<Eigen::Index>(data.covariates())));
  return find_mode([&](const Vector& b) { return logistic_log_posterior(b, data, prior_sd).value; },
                   [&](const Vector& b) { return logistic_log_posterior(b, data, prior_sd).gradient; }, x0);
}

/// Inverse observed information at `mode`, the default random-walk preconditioner.
inline Matrix logistic_preconditioner(const LogisticData& data, const Vector& mode, double prior_sd = 10.0) {
  const Matrix info = -logistic_log_posterior_hessian(mode, data, prior_sd);
  return info.inverse();
}

struct LogisticRwmhConfig {
  std::size_t n = 10000;
  Vector start;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  /// Proposal covariance is tau * preconditioner (identity when empty).
  double tau = 1.0;
  Matrix preconditioner;
  double prior_sd = 10.0;
};

/// Random-walk Metropolis with multivariate normal proposals.
inline SamplerResult logistic_rwmh(const LogisticData& data, const LogisticRwmhConfig& config) {
  data.validate();
  const auto d = static_cast<Eigen::Index>(data.covariates());
  detail::require(config.start.size() == d, "starting point does not match the design");
  detail::require(config.tau > 0.0, "tau must be positive");
  detail::require(config.n >= 1, "chain length must be positive");
  const Matrix base = config.preconditioner.size() == 0 ? Matrix(Matrix::Identity(d, d)) : config.preconditioner;
  Eigen::LLT<Matrix> llt(config.tau * base);
  detail::require(llt.info() == Eigen::Success, "proposal covariance is not positive definite");
  const Matrix L = llt.matrixL();

  Rng rng(config.seed, config.stream);
  Vector beta = config.start;
  double current = logistic_log_posterior(beta, data, config.prior_sd).value;
  Matrix draws(static_cast<Eigen::Index>(config.n), d);
  Vector z(d);
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < config.n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(j) = rng.normal();
    const Vector proposal = beta + L * z;
    const double lp = logistic_log_posterior(proposal, data, config.prior_sd).value;
    if (std::log(rng.uniform()) < lp - current) {
      beta = proposal;
      current = lp;
      ++accepted;
    }
    draws.row(static_cast<Eigen::Index>(i)) = beta.transpose();
  }
  return {Chain(std::move(draws), "logistic", config.seed),
          static_cast<double>(accepted) / static_cast<double>(config.n)};
}

/// Adjusts tau over short pilot runs until the acceptance rate is near `target`.
inline double tune_rwmh_scale(const LogisticData& data, LogisticRwmhConfig config, double target = 0.4,
                              std::size_t pilot_n = 2000, std::size_t rounds = 20) {
  double log_tau = std::log(config.tau);
  for (std::size_t r = 0; r < rounds; ++r) {
    config.tau = std::exp(log_tau);
    config.n = pilot_n;
    config.stream = 0x7E11 + r;
    const double rate = logistic_rwmh(data, config).acceptance_rate;
    if (std::abs(rate - target) < 0.02) break;
    log_tau += 2.5 * (rate - target);
  }
  return std::exp(log_tau);
}

}  // namespace mcdiag
