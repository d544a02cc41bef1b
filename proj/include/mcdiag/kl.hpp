#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "mcdiag/chain.hpp"
#include "mcdiag/kde.hpp"
#include "mcdiag/rng.hpp"
#include "mcdiag/target.hpp"

namespace mcdiag {

/// Log density ratios are clamped to +/- this value when a density vanishes.
inline constexpr double kLogRatioClamp = 700.0;

struct KlEstimate {
  double value = 0.0;   // floored at 0
  double raw = 0.0;     // Monte Carlo mean before flooring
  bool floored = false;
  std::size_t clamped = 0;
};

namespace detail {

inline double clamp_log_ratio(double r, std::size_t& clamped) {
  if (std::isnan(r)) {
    ++clamped;
    return 0.0;
  }
  if (r > kLogRatioClamp) {
    ++clamped;
    return kLogRatioClamp;
  }
  if (r < -kLogRatioClamp) {
    ++clamped;
    return -kLogRatioClamp;
  }
  return r;
}

}  // namespace detail

/// Monte Carlo KL(from | to) using smoothed-bootstrap draws from `from`.
inline KlEstimate kl_estimate(const KdeModel& from, const KdeModel& to, std::size_t samples,
                              std::uint64_t seed) {
  detail::require(from.dim() == to.dim(), "KL between densities of different dimension");
  detail::require(samples >= 1, "KL estimate needs at least one Monte Carlo sample");
  KlEstimate est;
  if (&from == &to) return est;
  const Matrix z = from.sample(samples, seed);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = z;
  double sum = 0.0;
  for (Eigen::Index k = 0; k < rows.rows(); ++k) {
    const double* x = rows.row(k).data();
    sum += detail::clamp_log_ratio(from.log_density(x) - to.log_density(x), est.clamped);
  }
  est.raw = sum / static_cast<double>(samples);
  est.floored = est.raw < 0.0;
  est.value = std::max(0.0, est.raw);
  return est;
}

/// Pairwise symmetric KL divergences between chains.
struct KlMatrix {
  Matrix values;
  std::size_t mc_samples = 0;
  double cutoff = 0.0;
  std::size_t clamped = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
};

struct Tool1Result {
  KlMatrix kl;
  double max = 0.0;
  bool pass = false;
};

/// Default cutoffs: joint bivariate test at level 0.05, and Bonferroni-adjusted marginals.
inline constexpr double kTool1BivariateCutoff = 0.06;
inline constexpr double kTool1MarginalCutoff = 0.01;

/// Maximum pairwise symmetric KL between the chains' adaptive KDEs.
inline Tool1Result tool1(const ChainSet& chains, std::size_t samples = 10000, double cutoff = kTool1BivariateCutoff,
                         std::uint64_t seed = 1) {
  detail::require(chains.count() >= 2, "requires >=2 chains");
  const std::size_t m = chains.count();
  std::vector<KdeModel> models;
  models.reserve(m);
  for (const auto& c : chains) models.push_back(adaptive_kde_fit(c));

  Tool1Result r;
  r.kl.values = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  r.kl.mc_samples = samples;
  r.kl.cutoff = cutoff;
  std::uint64_t pair = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j, ++pair) {
      const auto ij = kl_estimate(models[i], models[j], samples, derive_seed(seed, 2 * pair));
      const auto ji = kl_estimate(models[j], models[i], samples, derive_seed(seed, 2 * pair + 1));
      const double sym = 0.5 * (ij.value + ji.value);
      r.kl.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sym;
      r.kl.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = sym;
      r.kl.clamped += ij.clamped + ji.clamped;
    }
  }
  r.max = r.kl.values.maxCoeff();
  r.pass = r.max <= cutoff;
  return r;
}

struct TileResult {
  /// same[i][j]: chains i and j are within the cutoff (gray tile).
  std::vector<std::vector<bool>> same;
  /// Connected components of the "same" graph, 0-based chain indices, sorted.
  std::vector<std::vector<std::size_t>> clusters;
};

inline TileResult tile_clusters(const KlMatrix& kl, double cutoff) {
  const std::size_t m = kl.size();
  TileResult r;
  r.same.assign(m, std::vector<bool>(m, false));
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      r.same[i][j] = i == j || kl(i, j) <= cutoff;
      if (r.same[i][j]) parent[find(i)] = find(j);
    }
  }
  std::vector<std::vector<std::size_t>> groups(m);
  for (std::size_t i = 0; i < m; ++i) groups[find(i)].push_back(i);
  for (auto& g : groups)
    if (!g.empty()) r.clusters.push_back(std::move(g));
  std::sort(r.clusters.begin(), r.clusters.end());
  return r;
}

struct Tool2Result {
  double c_hat = 0.0;
  double c_star = 0.0;
  double t2_star = 0.0;
  /// False when more than 5% of the target is estimated to be missing.
  bool captured = false;
  std::size_t clamped = 0;
  std::size_t outside_support = 0;  // KDE draws rejected for leaving the target box
};

inline constexpr double kTool2Cutoff = 0.05;

/// Midpoint-rule integral of f over the target's box.
inline double box_quadrature(const TargetModel& target, std::size_t resolution) {
  detail::require(target.bounded(), "quadrature needs a bounded support box");
  detail::require(resolution >= 1, "quadrature resolution must be positive");
  const std::size_t d = target.dim;
  const Vector width = (target.upper - target.lower) / static_cast<double>(resolution);
  std::vector<std::size_t> idx(d, 0);
  Vector x(static_cast<Eigen::Index>(d));
  double sum = 0.0;
  while (true) {
    for (std::size_t j = 0; j < d; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      x(jj) = target.lower(jj) + (static_cast<double>(idx[j]) + 0.5) * width(jj);
    }
    const double lf = target.log_density(x);
    if (std::isfinite(lf)) sum += std::exp(lf);
    std::size_t j = 0;
    while (j < d && ++idx[j] == resolution) idx[j++] = 0;
    if (j == d) break;
  }
  detail::require(std::isfinite(sum), "quadrature of the target is not finite");
  return sum * width.prod();
}

/// Normalizing-constant discrepancy |c_hat - c*| / c* for one chain of dimension <= 2.
inline Tool2Result tool2(const Chain& chain, const TargetModel& target, std::size_t grid_resolution = 400,
                         std::size_t samples = 10000, std::uint64_t seed = 1) {
  detail::require(chain.dim() <= 2, "tool2 supports chains of dimension <= 2");
  detail::require(target.dim == chain.dim(), "target dimension does not match chain");
  Tool2Result r;
  r.c_star = box_quadrature(target, grid_resolution);
  detail::require(r.c_star > 0.0, "target integrates to zero over its box");

  const auto model = adaptive_kde_fit(chain);
  const Matrix z = model.sample(samples, seed);
  // The KDE is truncated to the box: draws outside are rejected and the kept fraction
  // renormalizes it, so kernel tails past the support do not count as missing mass.
  double sum = 0.0;
  std::size_t kept = 0;
  for (Eigen::Index k = 0; k < z.rows(); ++k) {
    const Vector x = z.row(k).transpose();
    if (!target.in_support(x)) {
      ++r.outside_support;
      continue;
    }
    sum += detail::clamp_log_ratio(model.log_density(x.data()) - target.log_density(x), r.clamped);
    ++kept;
  }
  detail::require(kept > 0, "every KDE draw fell outside the target box");
  // log c_hat = -E_p[log(p / f)], the constant that zeroes KL(p | f / c).
  const double fraction = static_cast<double>(kept) / static_cast<double>(samples);
  r.c_hat = fraction * std::exp(-sum / static_cast<double>(kept));
  r.t2_star = std::abs(r.c_hat - r.c_star) / r.c_star;
  r.captured = r.t2_star <= kTool2Cutoff;
  return r;
}

/// Null-distribution cutoff for Tool 1: repeatedly split one chain's draws at random into two
/// halves, and take the `level` quantile of their symmetric KL.
inline double calibrate_tool1_cutoff(const Chain& chain, std::size_t resamples = 200, double level = 0.95,
                                     std::size_t samples = 10000, std::uint64_t seed = 1) {
  detail::require(chain.size() >= 8, "calibration needs at least 8 draws");
  detail::require(resamples >= 1, "calibration needs at least one resample");
  const auto n = static_cast<Eigen::Index>(chain.size());
  const Eigen::Index half = n / 2;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::vector<double> stats;
  Rng rng(seed, 0xCA11B);
  for (std::size_t b = 0; b < resamples; ++b) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng.engine());
    Matrix first(half, chain.draws().cols()), second(n - half, chain.draws().cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto row = chain.draws().row(order[static_cast<std::size_t>(i)]);
      if (i < half) first.row(i) = row;
      else second.row(i - half) = row;
    }
    const auto p1 = adaptive_kde_fit(first), p2 = adaptive_kde_fit(second);
    const double sym = 0.5 * (kl_estimate(p1, p2, samples, derive_seed(seed, 2 * b)).value +
                              kl_estimate(p2, p1, samples, derive_seed(seed, 2 * b + 1)).value);
    stats.push_back(sym);
  }
  std::sort(stats.begin(), stats.end());
  return sorted_quantile(stats, level);
}

}  // namespace mcdiag
