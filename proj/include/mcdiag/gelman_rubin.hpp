#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcdiag/chain.hpp"
#include "mcdiag/variance.hpp"

namespace mcdiag {

struct PsrfResult {
  double r_hat = 0.0;
  double within = 0.0;       // W
  double between_n = 0.0;    // B/n
  double pooled = 0.0;       // V-hat = ((n-1)/n) W + B/n
  std::size_t m = 0;
  std::size_t n = 0;
};

struct MpsrfResult {
  double r_hat = 0.0;
  double lambda1 = 0.0;
  Matrix within;      // W*
  Matrix between_n;   // B*/n
  std::size_t m = 0;
  std::size_t n = 0;
};

namespace detail {

inline void require_parallel_chains(const ChainSet& chains) {
  require(chains.count() >= 2, "requires >=2 chains");
  require(chains.equal_lengths(), "chains must have equal length");
  require(chains.common_length() >= 2, "chains must have at least 2 iterations");
}

}  // namespace detail

/// Potential scale reduction factor for coordinate `coord` (0-based).
inline PsrfResult psrf(const ChainSet& chains, std::size_t coord = 0) {
  detail::require_parallel_chains(chains);
  detail::require(coord < chains.dim(), "coordinate out of range");
  const std::size_t m = chains.count(), n = chains.common_length();
  const auto col = static_cast<Eigen::Index>(coord);

  std::vector<double> means(m);
  double within_ss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Vector x = chains[i].draws().col(col);
    means[i] = detail::sequential_mean(x);
    for (Eigen::Index j = 0; j < x.size(); ++j) within_ss += (x(j) - means[i]) * (x(j) - means[i]);
  }
  double grand = 0.0;
  for (double mu : means) grand += mu;
  grand /= static_cast<double>(m);
  double between_ss = 0.0;
  for (double mu : means) between_ss += (mu - grand) * (mu - grand);

  PsrfResult r;
  r.m = m;
  r.n = n;
  r.within = within_ss / (static_cast<double>(m) * static_cast<double>(n - 1));
  r.between_n = between_ss / static_cast<double>(m - 1);
  r.pooled = (static_cast<double>(n - 1) / static_cast<double>(n)) * r.within + r.between_n;
  detail::require(r.within > 0.0, "degenerate within-chain variance");
  r.r_hat = r.pooled / r.within;
  return r;
}

/// Multivariate PSRF from the largest eigenvalue of W*^{-1} B*/n.
inline MpsrfResult mpsrf(const ChainSet& chains) {
  detail::require_parallel_chains(chains);
  const std::size_t m = chains.count(), n = chains.common_length();
  const auto p = static_cast<Eigen::Index>(chains.dim());

  Matrix means(static_cast<Eigen::Index>(m), p);
  Matrix within = Matrix::Zero(p, p);
  for (std::size_t i = 0; i < m; ++i) {
    const Matrix& x = chains[i].draws();
    const Eigen::RowVectorXd mu = x.colwise().mean();
    means.row(static_cast<Eigen::Index>(i)) = mu;
    const Matrix centered = x.rowwise() - mu;
    within.noalias() += centered.transpose() * centered;
  }
  within /= static_cast<double>(m) * static_cast<double>(n - 1);
  const Eigen::RowVectorXd grand = means.colwise().mean();
  const Matrix dm = means.rowwise() - grand;
  Matrix between_n = dm.transpose() * dm / static_cast<double>(m - 1);

  Eigen::LLT<Matrix> llt(within);
  detail::require(llt.info() == Eigen::Success && !detail::nearly_singular(within),
                  "within-chain covariance W* is singular");
  // Symmetric reduction: eig(W^{-1} B) == eig(L^{-1} B L^{-T}).
  const auto L = llt.matrixL();
  Matrix reduced = L.solve(between_n);
  reduced = L.solve(reduced.transpose()).transpose();
  reduced = 0.5 * (reduced + reduced.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(reduced, Eigen::EigenvaluesOnly);

  MpsrfResult r;
  r.m = m;
  r.n = n;
  r.lambda1 = std::max(0.0, es.eigenvalues().maxCoeff());
  r.r_hat = static_cast<double>(n - 1) / static_cast<double>(n) +
            (1.0 + 1.0 / static_cast<double>(m)) * r.lambda1;
  r.within = std::move(within);
  r.between_n = std::move(between_n);
  return r;
}

struct PsrfPoint {
  std::size_t n = 0;
  std::optional<double> r_hat;
  std::string error;  // set when the prefix was degenerate
};

/// R-hat on growing prefixes n_k = k * step. `coord` unset selects the multivariate statistic.
inline std::vector<PsrfPoint> psrf_series(const ChainSet& chains, std::size_t step,
                                          std::optional<std::size_t> coord = 0) {
  detail::require(step >= 2, "psrf series step must be at least 2");
  detail::require(chains.count() >= 2, "requires >=2 chains");
  const std::size_t n = chains.common_length();
  std::vector<PsrfPoint> out;
  for (std::size_t len = step; len <= n; len += step) {
    PsrfPoint point{len, std::nullopt, {}};
    try {
      const auto prefix = chains.prefix(len);
      point.r_hat = coord ? psrf(prefix, *coord).r_hat : mpsrf(prefix).r_hat;
    } catch (const DiagnosticError& e) {
      point.error = e.what();
    }
    out.push_back(std::move(point));
  }
  return out;
}

}  // namespace mcdiag
