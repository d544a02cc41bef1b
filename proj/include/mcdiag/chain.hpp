#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mcdiag/error.hpp"

namespace mcdiag {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowView = Eigen::Ref<const Eigen::RowVectorXd>;

/// One Markov chain: n iterations (rows) by p dimensions (columns).
class Chain {
public:
  Chain(Matrix draws, std::string id = {}, std::optional<std::uint64_t> seed = std::nullopt)
      : draws_(std::move(draws)), id_(std::move(id)), seed_(seed) {
    detail::require(draws_.rows() >= 1, "chain must contain at least one iteration");
    detail::require(draws_.cols() >= 1, "chain must have at least one dimension");
    detail::require(draws_.allFinite(), "chain '" + id_ + "' contains non-finite draws");
  }

  /// Single-column chain from a plain vector of draws.
  static Chain from_values(const std::vector<double>& values, std::string id = {}) {
    Matrix m(static_cast<Eigen::Index>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = values[i];
    return Chain(std::move(m), std::move(id));
  }

  const Matrix& draws() const noexcept { return draws_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(draws_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(draws_.cols()); }
  const std::string& id() const noexcept { return id_; }
  std::optional<std::uint64_t> seed() const noexcept { return seed_; }

  /// Rows [begin, begin + count). Burn-in is removed this way, before any diagnostic runs.
  Chain slice(std::size_t begin, std::size_t count) const {
    detail::require(begin + count <= size() && count >= 1, "chain slice out of range");
    return Chain(draws_.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)),
                 id_, seed_);
  }

  Chain drop_burnin(std::size_t burnin) const {
    detail::require(burnin < size(), "burn-in " + std::to_string(burnin) +
                                         " leaves no iterations in chain '" + id_ + "'");
    return slice(burnin, size() - burnin);
  }

  Chain prefix(std::size_t count) const { return slice(0, count); }

  /// Keeps the listed columns (0-based) in the given order.
  Chain select(const std::vector<std::size_t>& columns) const {
    detail::require(!columns.empty(), "no coordinates selected");
    Matrix out(draws_.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
      detail::require(columns[j] < dim(), "coordinate " + std::to_string(columns[j] + 1) +
                                              " out of range for p=" + std::to_string(dim()));
      out.col(static_cast<Eigen::Index>(j)) = draws_.col(static_cast<Eigen::Index>(columns[j]));
    }
    return Chain(std::move(out), id_, seed_);
  }

private:
  Matrix draws_;
  std::string id_;
  std::optional<std::uint64_t> seed_;
};

/// m chains of a common dimension.
class ChainSet {
public:
  explicit ChainSet(std::vector<Chain> chains) : chains_(std::move(chains)) {
    detail::require(!chains_.empty(), "chain set must contain at least one chain");
    for (const auto& c : chains_)
      detail::require(c.dim() == chains_.front().dim(), "chains in a set must share dimension p");
  }

  std::size_t count() const noexcept { return chains_.size(); }
  std::size_t dim() const noexcept { return chains_.front().dim(); }
  const Chain& operator[](std::size_t i) const { return chains_.at(i); }
  const std::vector<Chain>& chains() const noexcept { return chains_; }
  auto begin() const noexcept { return chains_.begin(); }
  auto end() const noexcept { return chains_.end(); }

  bool equal_lengths() const noexcept {
    return std::all_of(chains_.begin(), chains_.end(),
                       [&](const Chain& c) { return c.size() == chains_.front().size(); });
  }

  /// Common length; throws if the chains differ.
  std::size_t common_length() const {
    detail::require(equal_lengths(), "chains must have equal length");
    return chains_.front().size();
  }

  ChainSet prefix(std::size_t count) const {
    std::vector<Chain> out;
    out.reserve(chains_.size());
    for (const auto& c : chains_) out.push_back(c.prefix(count));
    return ChainSet(std::move(out));
  }

  ChainSet drop_burnin(std::size_t burnin) const {
    std::vector<Chain> out;
    for (const auto& c : chains_) out.push_back(c.drop_burnin(burnin));
    return ChainSet(std::move(out));
  }

  ChainSet select(const std::vector<std::size_t>& columns) const {
    std::vector<Chain> out;
    for (const auto& c : chains_) out.push_back(c.select(columns));
    return ChainSet(std::move(out));
  }

private:
  std::vector<Chain> chains_;
};

/// g(X_i) for one real-valued g, in iteration order.
struct ScalarSeries {
  Vector values;
  std::string chain_id;
  std::string function;

  ScalarSeries(Vector v, std::string chain = {}, std::string fn = {})
      : values(std::move(v)), chain_id(std::move(chain)), function(std::move(fn)) {
    detail::require(values.size() >= 1, "series must be non-empty");
    detail::require(values.allFinite(), "series contains non-finite values");
  }

  static ScalarSeries from(const std::vector<double>& v) {
    return ScalarSeries(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  }

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
  double operator[](std::size_t i) const { return values(static_cast<Eigen::Index>(i)); }

  ScalarSeries slice(std::size_t begin, std::size_t count) const {
    detail::require(begin + count <= size() && count >= 1, "series slice out of range");
    return ScalarSeries(values.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)),
                        chain_id, function);
  }
};

/// The function g applied to each draw.
struct FunctionSpec {
  /// Coordinate j, 1-based.
  struct Coordinate {
    std::size_t index = 1;
  };
  struct IdentityVector {};
  /// I(x_j <= threshold), coordinate 1-based.
  struct Indicator {
    double threshold = 0.0;
    std::size_t index = 1;
  };
  /// Arbitrary user-supplied g: R^p -> R.
  struct User {
    std::string name;
    std::function<double(const RowView&)> fn;
  };

  std::variant<Coordinate, IdentityVector, Indicator, User> kind;

  static FunctionSpec coordinate(std::size_t j) { return {Coordinate{j}}; }
  static FunctionSpec identity() { return {IdentityVector{}}; }
  static FunctionSpec indicator(double u, std::size_t j = 1) { return {Indicator{u, j}}; }
  static FunctionSpec user(std::string name, std::function<double(const RowView&)> fn) {
    return {User{std::move(name), std::move(fn)}};
  }

  std::string describe() const {
    struct {
      std::string operator()(const Coordinate& c) const { return "x" + std::to_string(c.index); }
      std::string operator()(const IdentityVector&) const { return "identity"; }
      std::string operator()(const Indicator& i) const {
        return "I(x" + std::to_string(i.index) + "<=" + std::to_string(i.threshold) + ")";
      }
      std::string operator()(const User& u) const { return u.name; }
    } visitor;
    return std::visit(visitor, kind);
  }
};

namespace detail {

inline void check_index(std::size_t j, std::size_t p) {
  require(j >= 1 && j <= p,
          "coordinate " + std::to_string(j) + " out of range for p=" + std::to_string(p));
}

}  // namespace detail

/// Real-valued g applied to every draw. Identity-vector specs go through apply_vector_function.
inline ScalarSeries apply_function(const Chain& chain, const FunctionSpec& f) {
  const auto& x = chain.draws();
  Vector out(x.rows());
  if (const auto* c = std::get_if<FunctionSpec::Coordinate>(&f.kind)) {
    detail::check_index(c->index, chain.dim());
    out = x.col(static_cast<Eigen::Index>(c->index - 1));
  } else if (const auto* ind = std::get_if<FunctionSpec::Indicator>(&f.kind)) {
    detail::check_index(ind->index, chain.dim());
    detail::require(std::isfinite(ind->threshold), "indicator threshold must be finite");
    const auto col = x.col(static_cast<Eigen::Index>(ind->index - 1));
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = col(i) <= ind->threshold ? 1.0 : 0.0;
  } else if (const auto* u = std::get_if<FunctionSpec::User>(&f.kind)) {
    detail::require(static_cast<bool>(u->fn), "user function is empty");
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = u->fn(x.row(i));
  } else {
    throw DiagnosticError("identity-vector function yields a vector series; use apply_vector_function");
  }
  return ScalarSeries(std::move(out), chain.id(), f.describe());
}

/// Vector-valued g. Identity returns the chain; scalar specs return a one-column chain.
inline Chain apply_vector_function(const Chain& chain, const FunctionSpec& f) {
  if (std::holds_alternative<FunctionSpec::IdentityVector>(f.kind)) return chain;
  auto s = apply_function(chain, f);
  return Chain(Matrix(s.values), chain.id(), chain.seed());
}

/// Cumulative time averages; out[k-1] = (1/k) * sum of the first k values.
inline std::vector<double> running_mean(const ScalarSeries& series) {
  std::vector<double> out(series.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    sum += series[k];
    out[k] = sum / static_cast<double>(k + 1);
  }
  return out;
}

/// Type-7 quantile of already sorted data.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  detail::require(!sorted.empty(), "quantile of empty data");
  detail::require(q >= 0.0 && q <= 1.0, "quantile level must lie in [0,1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace detail {

/// Sequential left-to-right sum, shared by summary and running-mean code paths.
inline double sequential_mean(const Vector& v) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) sum += v(i);
  return sum / static_cast<double>(v.size());
}

/// Two-pass sample variance with divisor n-1.
inline double sample_variance(const Vector& v) {
  require(v.size() >= 2, "sample variance needs at least 2 values");
  const double mean = sequential_mean(v);
  double ss = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) ss += (v(i) - mean) * (v(i) - mean);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace detail

struct Summary {
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> sorted;

  double quantile(double q) const { return sorted_quantile(sorted, q); }
};

inline Summary summarize(const ScalarSeries& series) {
  detail::require(series.size() >= 2, "summary needs n >= 2 for the sample variance");
  Summary s;
  s.mean = detail::sequential_mean(series.values);
  s.variance = detail::sample_variance(series.values);
  s.sorted.assign(series.values.data(), series.values.data() + series.values.size());
  std::sort(s.sorted.begin(), s.sorted.end());
  return s;
}

inline double quantile(const ScalarSeries& series, double q) {
  std::vector<double> sorted(series.values.data(), series.values.data() + series.values.size());
  std::sort(sorted.begin(), sorted.end());
  return sorted_quantile(sorted, q);
}

}  // namespace mcdiag
