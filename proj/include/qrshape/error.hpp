#pragma once

#include <stdexcept>
#include <string>

namespace qrshape {

/// Matrix or vector shapes that do not conform.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Rank-deficient configuration (zero pivot in the QR factorisation).
class DegenerateConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model or reflection variant for which no density is implemented.
class UnsupportedModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure (quadrature did not converge, singular evaluation).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; message carries the offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace qrshape
