#pragma once

#include <stdexcept>
#include <string>

namespace biwarp {

/// Malformed or inconsistent manifest / expression text. Carries a 1-based
/// line and column when the failure can be pinned to a position.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line = 0, int column = 0)
      : std::runtime_error(line > 0 ? std::to_string(line) + ":" + std::to_string(column) + ": " + what
                                    : what),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// Evaluation outside the declared domain, or a non-finite intermediate.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The immersion is degenerate at the requested point (rank loss, tangential
/// normal vector, ...).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace biwarp
