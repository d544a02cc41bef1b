#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcdiag/error.hpp"

namespace mcdiag::io {

inline constexpr const char* kToolVersion = "mcdiag 0.1.0";

using Json = nlohmann::ordered_json;

/// One requested diagnostic on one target: either statistics plus a verdict, or an error.
struct DiagnosticRecord {
  std::string diagnostic;
  std::string target;                 // chain id, or "all" for multi-chain diagnostics
  std::optional<std::size_t> coord;   // 1-based; empty for joint diagnostics
  Json inputs = Json::object();
  Json statistics = Json::object();
  std::optional<bool> converged;      // empty when the diagnostic has no verdict
  std::optional<std::string> error;
  double runtime_ms = 0.0;

  Json to_json() const {
    Json j;
    j["diagnostic"] = diagnostic;
    j["target"] = target;
    j["coord"] = coord ? Json(*coord) : Json(nullptr);
    j["inputs"] = inputs;
    if (error) {
      j["status"] = "error";
      j["error"] = *error;
    } else {
      j["status"] = "ok";
      j["statistics"] = statistics;
      j["converged"] = converged ? Json(*converged) : Json(nullptr);
    }
    j["runtime_ms"] = runtime_ms;
    return j;
  }
};

struct InputFile {
  std::string path;
  std::string digest;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

struct DiagnosticReport {
  std::string command;
  std::vector<InputFile> inputs;
  std::vector<DiagnosticRecord> records;
  Json settings = Json::object();

  bool any_error() const {
    for (const auto& r : records)
      if (r.error) return true;
    return false;
  }

  bool any_nonconverged() const {
    for (const auto& r : records)
      if (!r.error && r.converged && !*r.converged) return true;
    return false;
  }

  Json to_json() const {
    Json j;
    j["tool_version"] = kToolVersion;
    j["command"] = command;
    j["settings"] = settings;
    j["inputs"] = Json::array();
    for (const auto& f : inputs)
      j["inputs"].push_back({{"path", f.path}, {"digest", f.digest}, {"rows", f.rows}, {"cols", f.cols}});
    j["records"] = Json::array();
    for (const auto& r : records) j["records"].push_back(r.to_json());
    return j;
  }

  std::string to_text() const {
    std::ostringstream out;
    out << kToolVersion << "  " << command << "\n";
    for (const auto& f : inputs) out << "input " << f.path << "  " << f.rows << "x" << f.cols << "  " << f.digest << "\n";
    out << "\n";
    for (const auto& r : records) {
      out << r.diagnostic << "  [" << r.target;
      if (r.coord) out << " x" << *r.coord;
      out << "]";
      for (const auto& [k, v] : r.inputs.items()) out << " " << k << "=" << v.dump();
      out << "\n";
      if (r.error) {
        out << "  error: " << *r.error << "\n";
        continue;
      }
      for (const auto& [k, v] : r.statistics.items()) {
        out << "  " << k << ": ";
        if (v.is_array() && v.size() > 12) out << "[" << v.size() << " entries, see JSON report]\n";
        else out << v.dump() << "\n";
      }
      if (r.converged) out << "  verdict: " << (*r.converged ? "converged" : "NOT converged") << "\n";
    }
    return out.str();
  }
};

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DiagnosticError("cannot write " + path.string());
  out << text;
}

/// Writes <stem>.json and <stem>.txt under `dir`.
inline void write_report(const std::filesystem::path& dir, const std::string& stem, const DiagnosticReport& report) {
  write_text_file(dir / (stem + ".json"), report.to_json().dump(2) + "\n");
  write_text_file(dir / (stem + ".txt"), report.to_text());
}

/// Per-variable summary: R-hat, CI half-width, and maximum marginal symmetric KL.
struct SummaryRow {
  std::string variable;
  std::optional<double> r_hat;
  std::optional<double> half_width;
  std::optional<double> tool1;
};

inline std::string format_summary_table(const std::vector<SummaryRow>& rows) {
  auto cell = [](const std::optional<double>& v) {
    char buf[32];
    if (!v) return std::string("-");
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return std::string(buf);
  };
  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.variable.size());
  std::ostringstream out;
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
  out << pad("Variable", width) << "  " << pad("R-hat", 8) << "  " << pad("half-width", 10) << "  Tool 1\n";
  for (const auto& r : rows)
    out << pad(r.variable, width) << "  " << pad(cell(r.r_hat), 8) << "  " << pad(cell(r.half_width), 10) << "  "
        << cell(r.tool1) << "\n";
  return out.str();
}

inline Json summary_table_json(const std::vector<SummaryRow>& rows) {
  Json j = Json::array();
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  for (const auto& r : rows)
    j.push_back({{"variable", r.variable}, {"r_hat", opt(r.r_hat)}, {"half_width", opt(r.half_width)},
                 {"tool1", opt(r.tool1)}});
  return j;
}

}  // namespace mcdiag::io
