#pragma once

#include <stdexcept>
#include <string>

namespace relclock {

// Base of every error raised by the library. The C API maps each subclass to
// a distinct status code (see relclock.h).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Query outside tabulated or configured range.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Numerical procedure did not reach its tolerance. Carries the best estimate.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double best_estimate, double error_estimate)
      : Error(what), best_estimate_(best_estimate), error_estimate_(error_estimate) {}
  double best_estimate() const noexcept { return best_estimate_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double best_estimate_;
  double error_estimate_;
};

// A kernel, covariance or rate block failed a positivity requirement.
class PositivityError : public Error {
 public:
  PositivityError(const std::string& what, double min_eigenvalue)
      : Error(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

// Request that the library deliberately does not support.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Inconsistent model data (shapes, labels, Hermiticity).
class ConstructionError : public Error {
 public:
  using Error::Error;
};

// Time step violates a stability bound.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

// Malformed or incomplete configuration.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace relclock
