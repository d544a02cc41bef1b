#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mcdiag {

/// Raised when a diagnostic or estimator cannot be computed for its input.
class DiagnosticError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised on malformed chain files and other input problems.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t line, const std::string& source = {})
      : std::runtime_error((source.empty() ? "" : source + ": ") + "line " + std::to_string(line) + ": " + what),
        line_(line), detail_(what) {}

  /// Message without the location prefix.
  const std::string& detail() const noexcept { return detail_; }

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
  std::string detail_;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw DiagnosticError(message);
}

}  // namespace detail
}  // namespace mcdiag
