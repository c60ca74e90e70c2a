#pragma once

#include <stdexcept>
#include <string>

namespace ldx {

/// Base of all library errors. exit_code() is the CLI status for the class.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class RangeError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class DomainError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class ModelError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

class GapViolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ContinuationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateVariance : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ScaleError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 5; }
};

}  // namespace ldx
