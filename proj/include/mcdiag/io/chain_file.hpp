#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mcdiag/chain.hpp"
#include "mcdiag/error.hpp"

namespace mcdiag::io {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

/// Strict decimal parse: the whole cell must be consumed and the value finite.
inline double parse_cell(std::string_view cell, std::size_t line) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
    throw ParseError("non-numeric cell '" + std::string(cell) + "'", line);
  if (!std::isfinite(v)) throw ParseError("non-finite cell '" + std::string(cell) + "'", line);
  return v;
}

}  // namespace detail

/// 17 significant digits, enough to round-trip any double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

inline Chain parse_chain(std::istream& in, std::string id = "chain") {
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> width;
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto cells = detail::split(body);
    if (!width) {
      // header row: names only, but it fixes the column count
      for (const auto& c : cells)
        if (c.empty()) throw ParseError("empty column name in header", line_no);
      width = cells.size();
      continue;
    }
    if (cells.size() != *width)
      throw ParseError("expected " + std::to_string(*width) + " columns, found " + std::to_string(cells.size()),
                       line_no);
    for (const auto& c : cells) values.push_back(detail::parse_cell(c, line_no));
    ++rows;
  }
  if (!width) throw ParseError("empty file", line_no == 0 ? 1 : line_no);
  if (rows == 0) throw ParseError("no data rows after header", line_no);
  Matrix draws(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(*width));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < *width; ++j)
      draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * *width + j];
  return Chain(std::move(draws), std::move(id));
}

/// Chain id is the file stem.
inline Chain load_chain_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DiagnosticError("cannot open chain file " + path.string());
  try {
    return parse_chain(in, path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(e.detail(), e.line(), path.string());
  }
}

inline void write_chain(std::ostream& out, const Chain& chain) {
  const auto& d = chain.draws();
  for (Eigen::Index j = 0; j < d.cols(); ++j) out << (j ? "," : "") << 'x' << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) out << (j ? "," : "") << format_double(d(i, j));
    out << '\n';
  }
}

inline void save_chain_file(const std::filesystem::path& path, const Chain& chain) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DiagnosticError("cannot write chain file " + path.string());
  write_chain(out, chain);
  if (!out) throw DiagnosticError("write failed for " + path.string());
}

inline ChainSet load_chain_files(const std::vector<std::filesystem::path>& paths) {
  mcdiag::detail::require(!paths.empty(), "no chain files given");
  std::vector<Chain> chains;
  chains.reserve(paths.size());
  for (const auto& p : paths) chains.push_back(load_chain_file(p));
  return ChainSet(std::move(chains));
}

/// FNV-1a over the file bytes, as a hex string; used as an input digest in reports.
inline std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DiagnosticError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream s;
  s << std::hex << h;
  return s.str();
}

}  // namespace mcdiag::io
