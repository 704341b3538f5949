#pragma once

#include <stdexcept>
#include <string>

namespace blindconv {

/// Shapes or lengths of operands disagree, or a size is out of range.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A real-origin spectrum is not conjugate symmetric.
class SymmetryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Input violates a numeric precondition (non-unit vector, zero ground truth, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A dense materialization would exceed its configured size cap.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A randomized construction gave up after its retry budget.
class RetriesExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration text; carries the 1-based line number when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace blindconv
