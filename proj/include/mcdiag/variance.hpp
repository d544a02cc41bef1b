#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcdiag/chain.hpp"

namespace mcdiag {

enum class VarianceMethod { BatchMeans, Spectral };

inline const char* to_string(VarianceMethod m) {
  return m == VarianceMethod::BatchMeans ? "batch-means" : "spectral";
}

/// Long-run variance sigma^2 and marginal variance lambda^2 of one series.
struct VarianceEstimate {
  double sigma2 = 0.0;
  double lambda2 = 0.0;
  VarianceMethod method = VarianceMethod::BatchMeans;
  /// Batch size for batch means, truncation lag for the spectral estimator.
  std::size_t window = 0;
  std::size_t batches = 0;
  std::size_t n = 0;
  /// sigma2 == 0 (constant series or identical batch means).
  bool degenerate = false;
  /// Spectral estimate was negative and has been floored.
  bool floored = false;
};

/// Long-run covariance Sigma and sample covariance Lambda of a vector series.
struct CovarianceEstimate {
  Matrix sigma;
  Matrix lambda;
  VarianceMethod method = VarianceMethod::BatchMeans;
  std::size_t batch_size = 0;
  std::size_t batches = 0;
  std::size_t n = 0;
  /// Negative eigenvalues of Sigma were clipped to zero.
  bool psd_repaired = false;
  /// Sigma is (numerically) rank deficient; determinant consumers must refuse it.
  bool sigma_singular = false;
  bool lambda_singular = false;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(sigma.rows()); }
};

inline std::size_t default_window(std::size_t n) {
  return static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
}

namespace detail {

/// Biased autocovariances gamma(0..max_lag), divisor n.
inline std::vector<double> autocovariances(const Vector& x, std::size_t max_lag) {
  const auto n = static_cast<std::size_t>(x.size());
  require(max_lag < n, "lag must be smaller than the series length");
  const double mean = sequential_mean(x);
  const Vector c = x.array() - mean;
  std::vector<double> gamma(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    const auto len = static_cast<Eigen::Index>(n - k);
    gamma[k] = c.head(len).dot(c.segment(static_cast<Eigen::Index>(k), len)) / static_cast<double>(n);
  }
  return gamma;
}

/// Sample covariance (divisor n-1), entry-by-entry two-pass loops.
inline Matrix sample_covariance(const Matrix& x) {
  require(x.rows() >= 2, "sample covariance needs at least 2 rows");
  const Eigen::Index n = x.rows(), p = x.cols();
  Vector mean(p);
  for (Eigen::Index j = 0; j < p; ++j) mean(j) = sequential_mean(x.col(j));
  Matrix cov(p, p);
  for (Eigen::Index r = 0; r < p; ++r) {
    for (Eigen::Index c = r; c < p; ++c) {
      double ss = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) ss += (x(i, r) - mean(r)) * (x(i, c) - mean(c));
      cov(r, c) = cov(c, r) = ss / static_cast<double>(n - 1);
    }
  }
  return cov;
}

struct BatchMeansCore {
  Matrix sigma;
  std::size_t batch_size;
  std::size_t batches;
};

/// Nonoverlapping batch means; the trailing partial batch is dropped.
inline BatchMeansCore batch_means_core(const Matrix& x, std::optional<std::size_t> batch_size) {
  const auto n = static_cast<std::size_t>(x.rows());
  require(n >= 4, "batch means needs n >= 4");
  const std::size_t b = batch_size.value_or(default_window(n));
  require(b >= 1, "batch size must be positive");
  const std::size_t a = n / b;
  require(a >= 2, "batch means needs at least 2 batches (n=" + std::to_string(n) +
                      ", b=" + std::to_string(b) + ")");
  const Eigen::Index p = x.cols();
  Matrix means(static_cast<Eigen::Index>(a), p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < a; ++k) {
      double sum = 0.0;
      for (std::size_t i = k * b; i < (k + 1) * b; ++i) sum += x(static_cast<Eigen::Index>(i), j);
      means(static_cast<Eigen::Index>(k), j) = sum / static_cast<double>(b);
    }
  }
  Vector grand(p);
  for (Eigen::Index j = 0; j < p; ++j) grand(j) = sequential_mean(means.col(j));
  Matrix sigma(p, p);
  const double scale = static_cast<double>(b) / static_cast<double>(a - 1);
  for (Eigen::Index r = 0; r < p; ++r) {
    for (Eigen::Index c = r; c < p; ++c) {
      double ss = 0.0;
      for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(a); ++k)
        ss += (means(k, r) - grand(r)) * (means(k, c) - grand(c));
      sigma(r, c) = sigma(c, r) = scale * ss;
    }
  }
  return {std::move(sigma), b, a};
}

inline bool is_constant(const Vector& x) {
  return (x.array() == x(0)).all();
}

/// Rank check on a symmetric PSD matrix by relative eigenvalue size.
inline bool nearly_singular(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double largest = ev.cwiseAbs().maxCoeff();
  return largest <= 0.0 || ev.minCoeff() <= 1e-12 * largest;
}

}  // namespace detail

/// Lag-k sample autocorrelation with the biased (divisor n) autocovariance.
inline double lag_autocorrelation(const ScalarSeries& series, std::size_t k) {
  detail::require(k < series.size(), "lag " + std::to_string(k) + " >= series length");
  detail::require(!detail::is_constant(series.values), "zero variance");
  const auto gamma = detail::autocovariances(series.values, k);
  return gamma[k] / gamma[0];
}

/// ACF for lags 0..max_lag.
inline std::vector<double> autocorrelation_function(const ScalarSeries& series, std::size_t max_lag) {
  detail::require(max_lag < series.size(), "max lag must be smaller than the series length");
  detail::require(!detail::is_constant(series.values), "zero variance");
  auto gamma = detail::autocovariances(series.values, max_lag);
  const double g0 = gamma[0];
  for (auto& g : gamma) g /= g0;
  return gamma;
}

inline VarianceEstimate batch_means_var(const ScalarSeries& series,
                                        std::optional<std::size_t> batch_size = std::nullopt) {
  const auto core = detail::batch_means_core(Matrix(series.values), batch_size);
  VarianceEstimate est;
  est.sigma2 = core.sigma(0, 0);
  est.lambda2 = detail::sample_variance(series.values);
  est.method = VarianceMethod::BatchMeans;
  est.window = core.batch_size;
  est.batches = core.batches;
  est.n = series.size();
  est.degenerate = est.sigma2 <= 0.0;
  return est;
}

inline CovarianceEstimate multivariate_batch_means(const Chain& chain,
                                                   std::optional<std::size_t> batch_size = std::nullopt) {
  auto core = detail::batch_means_core(chain.draws(), batch_size);
  CovarianceEstimate est;
  est.method = VarianceMethod::BatchMeans;
  est.batch_size = core.batch_size;
  est.batches = core.batches;
  est.n = chain.size();
  est.lambda = detail::sample_covariance(chain.draws());
  est.sigma = std::move(core.sigma);

  Eigen::SelfAdjointEigenSolver<Matrix> es(est.sigma);
  if (es.eigenvalues().minCoeff() < 0.0) {
    const Vector clipped = es.eigenvalues().cwiseMax(0.0);
    est.sigma = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
    est.sigma = 0.5 * (est.sigma + est.sigma.transpose()).eval();
    est.psd_repaired = true;
  }
  est.sigma_singular = est.psd_repaired || est.batches <= chain.dim() || detail::nearly_singular(est.sigma);
  est.lambda_singular = detail::nearly_singular(est.lambda);
  return est;
}

/// Tukey-Hanning lag window, w(0) = 1 and w(1) = 0.
inline double tukey_hanning(double x) { return 0.5 * (1.0 + std::cos(std::numbers::pi * x)); }

/// Spectral density at frequency zero via a Tukey-Hanning lag window.
inline VarianceEstimate spectral_var_zero(const ScalarSeries& series,
                                          std::optional<std::size_t> bandwidth = std::nullopt) {
  const std::size_t n = series.size();
  detail::require(n >= 2, "spectral estimate needs at least 2 values");
  detail::require(!detail::is_constant(series.values), "zero variance");
  const std::size_t b = std::min(bandwidth.value_or(default_window(n)), n - 1);
  detail::require(b >= 1, "bandwidth must be positive");
  const auto gamma = detail::autocovariances(series.values, b);
  double s0 = gamma[0];
  for (std::size_t k = 1; k <= b; ++k)
    s0 += 2.0 * tukey_hanning(static_cast<double>(k) / static_cast<double>(b)) * gamma[k];

  VarianceEstimate est;
  est.lambda2 = detail::sample_variance(series.values);
  est.method = VarianceMethod::Spectral;
  est.window = b;
  est.n = n;
  if (s0 <= 0.0) {
    s0 = 1e-12 * est.lambda2;
    est.floored = true;
  }
  est.sigma2 = s0;
  return est;
}

}  // namespace mcdiag
