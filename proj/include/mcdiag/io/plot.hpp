#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mcdiag/chain.hpp"
#include "mcdiag/gelman_rubin.hpp"
#include "mcdiag/io/chain_file.hpp"
#include "mcdiag/io/report.hpp"
#include "mcdiag/kl.hpp"
#include "mcdiag/variance.hpp"

namespace mcdiag::io {

/// Columns of plotted numbers, written next to each figure as CSV.
struct PlotData {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string to_csv() const {
    std::ostringstream out;
    for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << columns[j];
    out << '\n';
    for (const auto& r : rows) {
      for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << format_double(r[j]);
      out << '\n';
    }
    return out.str();
  }
};

struct Plot {
  std::string svg;
  PlotData data;
};

namespace detail {

inline constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 20, kTop = 30, kBottom = 45;

inline std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Maps data coordinates to the plotting area and writes frame, title and axis labels.
class Canvas {
public:
  Canvas(const std::string& title, const std::string& xlabel, const std::string& ylabel, double x0, double x1,
         double y0, double y1)
      : x0_(x0), x1_(x1 > x0 ? x1 : x0 + 1), y0_(y0), y1_(y1 > y0 ? y1 : y0 + 1) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
         << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         << "<text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\">" << escape(title) << "</text>\n"
         << "<rect class=\"frame\" x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight
         << "\" height=\"" << kHeight - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n"
         << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 8 << "\" text-anchor=\"middle\">" << escape(xlabel)
         << "</text>\n"
         << "<text x=\"14\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
         << kHeight / 2 << ")\">" << escape(ylabel) << "</text>\n";
    tick_labels();
  }

  double px(double x) const { return kLeft + (x - x0_) / (x1_ - x0_) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0_) / (y1_ - y0_) * (kHeight - kTop - kBottom); }

  void polyline(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& color,
                const std::string& cls = "series") {
    out_ << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) out_ << (i ? " " : "") << num(px(xs[i])) << ',' << num(py(ys[i]));
    out_ << "\"/>\n";
  }

  void hline(double y, const std::string& color, bool dashed = false) {
    out_ << "<line x1=\"" << px(x0_) << "\" x2=\"" << px(x1_) << "\" y1=\"" << num(py(y)) << "\" y2=\"" << num(py(y))
         << "\" stroke=\"" << color << "\"" << (dashed ? " stroke-dasharray=\"4 3\"" : "") << "/>\n";
  }

  void bar(double x, double y, double half_width) {
    const double top = py(std::max(0.0, y)), bottom = py(std::min(0.0, y));
    out_ << "<rect class=\"bar\" x=\"" << num(px(x - half_width)) << "\" y=\"" << num(top) << "\" width=\""
         << num(px(x + half_width) - px(x - half_width)) << "\" height=\"" << num(std::max(bottom - top, 0.5))
         << "\" fill=\"steelblue\"/>\n";
  }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

private:
  void tick_labels() {
    for (int k = 0; k <= 4; ++k) {
      const double x = x0_ + (x1_ - x0_) * k / 4.0, y = y0_ + (y1_ - y0_) * k / 4.0;
      out_ << "<text x=\"" << num(px(x)) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">"
           << num(x) << "</text>\n"
           << "<text x=\"" << kLeft - 4 << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << num(y)
           << "</text>\n";
    }
  }

  double x0_, x1_, y0_, y1_;
  std::ostringstream out_;
};

inline std::pair<double, double> range(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double pad = (*hi - *lo) * 0.05 + (*hi == *lo ? 0.5 : 0.0);
  return {*lo - pad, *hi + pad};
}

}  // namespace detail

/// Time series of coordinate `coord` (0-based), one point per iteration.
inline Plot trace_plot(const Chain& chain, std::size_t coord = 0) {
  const auto s = apply_function(chain, FunctionSpec::coordinate(coord + 1));
  std::vector<double> xs(s.size()), ys(s.values.data(), s.values.data() + s.size());
  Plot p;
  p.data.columns = {"iteration", "value"};
  for (std::size_t i = 0; i < s.size(); ++i) {
    xs[i] = static_cast<double>(i + 1);
    p.data.rows.push_back({xs[i], ys[i]});
  }
  const auto [lo, hi] = detail::range(ys);
  detail::Canvas c("Trace " + chain.id() + " x" + std::to_string(coord + 1), "iteration", "value", 1.0,
                   static_cast<double>(s.size()), lo, hi);
  c.polyline(xs, ys, "black");
  p.svg = c.finish();
  return p;
}

/// Sample autocorrelations at lags 0..max_lag, one bar each.
inline Plot acf_plot(const Chain& chain, std::size_t coord = 0, std::size_t max_lag = 50) {
  const auto s = apply_function(chain, FunctionSpec::coordinate(coord + 1));
  const auto rho = autocorrelation_function(s, max_lag);
  Plot p;
  p.data.columns = {"lag", "acf"};
  const double lo = std::min(0.0, *std::min_element(rho.begin(), rho.end()));
  detail::Canvas c("ACF " + chain.id() + " x" + std::to_string(coord + 1), "lag", "autocorrelation", -0.5,
                   static_cast<double>(max_lag) + 0.5, lo, 1.0);
  c.hline(0.0, "black");
  for (std::size_t k = 0; k < rho.size(); ++k) {
    c.bar(static_cast<double>(k), rho[k], 0.35);
    p.data.rows.push_back({static_cast<double>(k), rho[k]});
  }
  p.svg = c.finish();
  return p;
}

/// Running time-average estimate of the coordinate's mean.
inline Plot running_mean_plot(const Chain& chain, std::size_t coord = 0) {
  const auto s = apply_function(chain, FunctionSpec::coordinate(coord + 1));
  const auto ys = running_mean(s);
  std::vector<double> xs(ys.size());
  Plot p;
  p.data.columns = {"iteration", "running_mean"};
  for (std::size_t i = 0; i < ys.size(); ++i) {
    xs[i] = static_cast<double>(i + 1);
    p.data.rows.push_back({xs[i], ys[i]});
  }
  const auto [lo, hi] = detail::range(ys);
  detail::Canvas c("Running mean " + chain.id() + " x" + std::to_string(coord + 1), "iteration", "estimate", 1.0,
                   static_cast<double>(ys.size()), lo, hi);
  c.polyline(xs, ys, "black");
  p.svg = c.finish();
  return p;
}

/// R-hat against iteration, evaluated every `step` iterations; dashed line at 1.1.
inline Plot rhat_plot(const ChainSet& chains, std::size_t step = 100, std::optional<std::size_t> coord = 0) {
  const auto points = psrf_series(chains, step, coord);
  std::vector<double> xs, ys;
  Plot p;
  p.data.columns = {"iteration", "r_hat"};
  for (const auto& pt : points) {
    if (!pt.r_hat) continue;
    xs.push_back(static_cast<double>(pt.n));
    ys.push_back(*pt.r_hat);
    p.data.rows.push_back({xs.back(), ys.back()});
  }
  mcdiag::detail::require(!xs.empty(), "no prefix produced a finite R-hat");
  auto [lo, hi] = detail::range(ys);
  lo = std::min(lo, 1.0);
  hi = std::max(hi, 1.15);
  const std::string what = coord ? "R-hat x" + std::to_string(*coord + 1) : std::string("Multivariate R-hat");
  detail::Canvas c(what, "iteration", "R-hat", xs.front(), xs.back(), lo, hi);
  c.hline(1.1, "red", true);
  c.polyline(xs, ys, "black");
  p.svg = c.finish();
  return p;
}

/// Gray tile where two chains are within the KL cutoff, black otherwise.
inline Plot tile_plot(const KlMatrix& kl, double cutoff) {
  const auto tiles = tile_clusters(kl, cutoff);
  const std::size_t m = kl.size();
  Plot p;
  p.data.columns = {"row", "col", "kl", "same"};
  std::ostringstream svg;
  const double cell = std::min(60.0, 480.0 / static_cast<double>(std::max<std::size_t>(m, 1)));
  const double origin = 50.0, side = cell * static_cast<double>(m);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << origin + side + 20 << "\" height=\""
      << origin + side + 20 << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << origin << "\" y=\"18\">KL tile plot, cutoff " << detail::num(cutoff) << "</text>\n";
  for (std::size_t i = 0; i < m; ++i) {
    svg << "<text x=\"" << origin - 8 << "\" y=\"" << origin + cell * (static_cast<double>(i) + 0.5) + 4
        << "\" text-anchor=\"end\">" << i + 1 << "</text>\n"
        << "<text x=\"" << origin + cell * (static_cast<double>(i) + 0.5) << "\" y=\"" << origin - 8
        << "\" text-anchor=\"middle\">" << i + 1 << "</text>\n";
    for (std::size_t j = 0; j < m; ++j) {
      const bool same = tiles.same[i][j];
      svg << "<rect class=\"tile " << (same ? "same" : "different") << "\" x=\""
          << origin + cell * static_cast<double>(j) << "\" y=\"" << origin + cell * static_cast<double>(i)
          << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"" << (same ? "#b0b0b0" : "#000000")
          << "\" stroke=\"white\"/>\n";
      p.data.rows.push_back({static_cast<double>(i + 1), static_cast<double>(j + 1), kl(i, j), same ? 1.0 : 0.0});
    }
  }
  svg << "</svg>\n";
  p.svg = svg.str();
  return p;
}

/// Writes <stem>.svg and <stem>.csv under `dir`.
inline void write_plot(const std::filesystem::path& dir, const std::string& stem, const Plot& plot) {
  write_text_file(dir / (stem + ".svg"), plot.svg);
  write_text_file(dir / (stem + ".csv"), plot.data.to_csv());
}

}  // namespace mcdiag::io
