#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcdiag/chain.hpp"
#include "mcdiag/rng.hpp"

namespace mcdiag {

namespace detail {

/// Kernels are truncated at this many (local) bandwidths; exp(-49/2) ~ 2e-11 of the peak.
inline constexpr double kKernelCutoff = 7.0;
inline constexpr std::size_t kMaxGridDim = 3;

/// Grid-bucketed Gaussian mixture components sharing a bandwidth-factor band.
struct KernelBand {
  using Key = std::array<std::int64_t, kMaxGridDim>;
  std::vector<double> cell_width;    // per dimension
  std::vector<Key> keys;             // sorted lexicographically
  std::vector<Eigen::ArrayXd> coords;  // one array per dimension, scaled by 1/h_j, in key order
  Eigen::ArrayXd inv_factor;         // 1 / lambda_i
  Eigen::ArrayXd weight;             // lambda_i^{-d}

  void assign(const std::vector<double>& points, std::size_t d, const std::vector<double>& inv_h,
              const std::vector<std::size_t>& order, const std::vector<double>& factors) {
    const auto n = static_cast<Eigen::Index>(order.size());
    coords.assign(d, Eigen::ArrayXd(n));
    inv_factor.resize(n);
    weight.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const std::size_t i = order[static_cast<std::size_t>(k)];
      for (std::size_t j = 0; j < d; ++j) coords[j](k) = points[i * d + j] * inv_h[j];
      inv_factor(k) = 1.0 / factors[i];
      weight(k) = std::pow(factors[i], -static_cast<double>(d));
    }
  }
};

/// Sum over components of exp(-|u|^2/2) * lambda^{-d} with u standardized per component.
class KernelIndex {
public:
  KernelIndex() = default;

  KernelIndex(const std::vector<double>& points, std::size_t d, const std::vector<double>& h,
              const std::vector<double>& factors)
      : d_(d), inv_h_(d) {
    for (std::size_t j = 0; j < d; ++j) inv_h_[j] = 1.0 / h[j];
    const std::size_t n = factors.size();
    // Dropped kernels each contribute at most w_max exp(-cutoff^2 / 2); keep that below 0.1% of the sum.
    const double fmin_all = *std::min_element(factors.begin(), factors.end());
    fallback_floor_ = 1e3 * static_cast<double>(n) * std::pow(fmin_all, -static_cast<double>(d)) *
                      std::exp(-0.5 * kKernelCutoff * kKernelCutoff);
    if (d_ > kMaxGridDim) {
      // Brute force: a single band scanned in full.
      std::vector<std::size_t> all(n);
      for (std::size_t i = 0; i < n; ++i) all[i] = i;
      KernelBand band;
      band.assign(points, d, inv_h_, all, factors);
      bands_.push_back(std::move(band));
      return;
    }
    const double fmin = *std::min_element(factors.begin(), factors.end());
    std::vector<int> band_of(n);
    int nbands = 0;
    for (std::size_t i = 0; i < n; ++i) {
      band_of[i] = static_cast<int>(std::floor(std::log2(factors[i] / fmin) + 1e-12));
      nbands = std::max(nbands, band_of[i] + 1);
    }
    for (int b = 0; b < nbands; ++b) {
      std::vector<std::size_t> members;
      double fmax = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (band_of[i] == b) {
          members.push_back(i);
          fmax = std::max(fmax, factors[i]);
        }
      if (members.empty()) continue;
      KernelBand band;
      band.cell_width.resize(d);
      for (std::size_t j = 0; j < d; ++j) band.cell_width[j] = h[j] * fmax;
      std::vector<std::pair<KernelBand::Key, std::size_t>> keyed;
      keyed.reserve(members.size());
      for (std::size_t i : members) keyed.emplace_back(cell_of(&points[i * d], band.cell_width), i);
      std::sort(keyed.begin(), keyed.end());
      std::vector<std::size_t> order;
      order.reserve(keyed.size());
      for (const auto& [key, i] : keyed) {
        band.keys.push_back(key);
        order.push_back(i);
      }
      band.assign(points, d, inv_h_, order, factors);
      bands_.push_back(std::move(band));
    }
  }

  double kernel_sum(const double* x) const {
    double total = 0.0;
    for (const auto& band : bands_) {
      if (band.keys.empty()) {
        total += scan(band, x, 0, static_cast<std::size_t>(band.weight.size()));
        continue;
      }
      const auto q = cell_of(x, band.cell_width);
      const auto reach = static_cast<std::int64_t>(kKernelCutoff) + 1;
      // Iterate over all cell prefixes (dimensions 0..d-2); the last dimension is a contiguous run.
      KernelBand::Key lo{}, hi{};
      for (std::size_t j = 0; j < d_; ++j) {
        lo[j] = q[j] - reach;
        hi[j] = q[j] + reach;
      }
      KernelBand::Key cur = lo;
      while (true) {
        KernelBand::Key first = cur, last = cur;
        first[d_ - 1] = lo[d_ - 1];
        last[d_ - 1] = hi[d_ - 1];
        const auto b = std::lower_bound(band.keys.begin(), band.keys.end(), first);
        const auto e = std::upper_bound(b, band.keys.end(), last);
        total += scan(band, x, static_cast<std::size_t>(b - band.keys.begin()),
                      static_cast<std::size_t>(e - band.keys.begin()));
        // Advance the prefix odometer over dimensions d-2 .. 0.
        std::size_t j = d_ - 1;
        bool done = true;
        while (j-- > 0) {
          if (cur[j] < hi[j]) {
            ++cur[j];
            done = false;
            break;
          }
          cur[j] = lo[j];
        }
        if (done) break;
      }
    }
    return total;
  }

  /// log of kernel_sum. Where the truncated sum is too small to bound the dropped tails,
  /// every kernel is summed in log space instead.
  double log_kernel_sum(const double* x) const {
    const double s = kernel_sum(x);
    if (s > fallback_floor_) return std::log(s);
    double peak = -std::numeric_limits<double>::infinity();
    std::vector<Eigen::ArrayXd> logs;
    for (const auto& band : bands_) {
      const auto len = band.weight.size();
      Eigen::ArrayXd u2 = Eigen::ArrayXd::Zero(len);
      for (std::size_t j = 0; j < d_; ++j) u2 += ((band.coords[j] - x[j] * inv_h_[j]) * band.inv_factor).square();
      logs.push_back(band.weight.log() - 0.5 * u2);
      if (len > 0) peak = std::max(peak, logs.back().maxCoeff());
    }
    if (!std::isfinite(peak)) return peak;
    double sum = 0.0;
    for (const auto& l : logs) sum += (l - peak).exp().sum();
    return peak + std::log(sum);
  }

private:
  KernelBand::Key cell_of(const double* x, const std::vector<double>& width) const {
    KernelBand::Key key{};
    for (std::size_t j = 0; j < d_; ++j) key[j] = static_cast<std::int64_t>(std::floor(x[j] / width[j]));
    return key;
  }

  /// Kernels past the cutoff inside scanned cells are kept; they only add accuracy.
  double scan(const KernelBand& band, const double* x, std::size_t begin, std::size_t end) const {
    if (end <= begin) return 0.0;
    const auto b = static_cast<Eigen::Index>(begin), len = static_cast<Eigen::Index>(end - begin);
    const auto f = band.inv_factor.segment(b, len);
    switch (d_) {
      case 1: {
        const auto u = (band.coords[0].segment(b, len) - x[0] * inv_h_[0]) * f;
        return (band.weight.segment(b, len) * (-0.5 * u.square()).exp()).sum();
      }
      case 2: {
        const auto u = (band.coords[0].segment(b, len) - x[0] * inv_h_[0]) * f;
        const auto v = (band.coords[1].segment(b, len) - x[1] * inv_h_[1]) * f;
        return (band.weight.segment(b, len) * (-0.5 * (u.square() + v.square())).exp()).sum();
      }
      default: {
        Eigen::ArrayXd u2 = Eigen::ArrayXd::Zero(len);
        for (std::size_t j = 0; j < d_; ++j)
          u2 += ((band.coords[j].segment(b, len) - x[j] * inv_h_[j]) * f).square();
        return (band.weight.segment(b, len) * (-0.5 * u2).exp()).sum();
      }
    }
  }

  std::size_t d_ = 0;
  std::vector<double> inv_h_;
  std::vector<KernelBand> bands_;
  double fallback_floor_ = 0.0;
};

}  // namespace detail

/// Adaptive (variable-bandwidth) Gaussian product-kernel density estimate.
class KdeModel {
public:
  /// Pilot fixed-bandwidth KDE, then local factors (pilot / geometric mean)^(-sensitivity).
  static KdeModel fit(const Matrix& samples, double sensitivity = 0.5) {
    const auto n = static_cast<std::size_t>(samples.rows());
    const auto d = static_cast<std::size_t>(samples.cols());
    detail::require(n >= 2, "KDE needs at least 2 points");
    detail::require(d >= 1, "KDE needs at least one dimension");
    detail::require(samples.allFinite(), "KDE sample contains non-finite values");
    detail::require(sensitivity >= 0.0 && sensitivity <= 1.0, "sensitivity must lie in [0,1]");

    KdeModel m;
    m.n_ = n;
    m.d_ = d;
    m.points_.resize(n * d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j)
        m.points_[i * d + j] = samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));

    const double rate = std::pow(4.0 / ((static_cast<double>(d) + 2.0) * static_cast<double>(n)),
                                 1.0 / (static_cast<double>(d) + 4.0));
    m.h_.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double var = detail::sample_variance(samples.col(static_cast<Eigen::Index>(j)));
      detail::require(var > 0.0, "zero marginal variance in dimension " + std::to_string(j + 1));
      m.h_[j] = std::sqrt(var) * rate;
    }

    const std::vector<double> ones(n, 1.0);
    const detail::KernelIndex pilot(m.points_, d, m.h_, ones);
    std::vector<double> pilot_density(n);
    double mean_log = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      pilot_density[i] = pilot.kernel_sum(&m.points_[i * d]);
      mean_log += std::log(pilot_density[i]);
    }
    mean_log /= static_cast<double>(n);
    m.factors_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      m.factors_[i] = std::exp(-sensitivity * (std::log(pilot_density[i]) - mean_log));

    m.log_norm_ = std::log(static_cast<double>(n)) +
                  0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
    for (double h : m.h_) m.log_norm_ += std::log(h);
    m.index_ = detail::KernelIndex(m.points_, d, m.h_, m.factors_);
    return m;
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return d_; }
  const std::vector<double>& bandwidth() const noexcept { return h_; }
  const std::vector<double>& local_factors() const noexcept { return factors_; }

  Eigen::RowVectorXd point(std::size_t i) const {
    return Eigen::Map<const Eigen::RowVectorXd>(&points_[i * d_], static_cast<Eigen::Index>(d_));
  }

  double density(const double* x) const { return std::exp(log_density(x)); }

  double density(const Vector& x) const {
    detail::require(static_cast<std::size_t>(x.size()) == d_, "evaluation point has wrong dimension");
    return density(x.data());
  }

  double log_density(const double* x) const {
    return index_.log_kernel_sum(x) - log_norm_;
  }

  /// Mean of the mixture: the support mean, since every kernel is centred on its point.
  Vector mean() const {
    Vector mu = Vector::Zero(static_cast<Eigen::Index>(d_));
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < d_; ++j) mu(static_cast<Eigen::Index>(j)) += points_[i * d_ + j];
    return mu / static_cast<double>(n_);
  }

  /// Smoothed bootstrap: a uniformly chosen support point plus its scaled Gaussian kernel noise.
  Matrix sample(std::size_t count, std::uint64_t seed) const {
    Rng rng(seed);
    Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(d_));
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t J = rng.index(n_);
      for (std::size_t j = 0; j < d_; ++j)
        out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
            points_[J * d_ + j] + h_[j] * factors_[J] * rng.normal();
    }
    return out;
  }

private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> points_;
  std::vector<double> h_;
  std::vector<double> factors_;
  double log_norm_ = 0.0;
  detail::KernelIndex index_;
};

inline KdeModel adaptive_kde_fit(const Matrix& samples, double sensitivity = 0.5) {
  return KdeModel::fit(samples, sensitivity);
}

inline KdeModel adaptive_kde_fit(const Chain& chain, double sensitivity = 0.5) {
  return KdeModel::fit(chain.draws(), sensitivity);
}

inline Matrix kde_sample(const KdeModel& model, std::size_t count, std::uint64_t seed) {
  return model.sample(count, seed);
}

}  // namespace mcdiag
