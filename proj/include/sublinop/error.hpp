#pragma once

#include <stdexcept>
#include <string>

namespace sublinop {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands of incompatible dimension.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition does not hold (non-elliptic body, bad constant, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed operator or grid input.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// An iterative method hit its iteration cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

}  // namespace sublinop
