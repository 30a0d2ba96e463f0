#pragma once

#include <stdexcept>
#include <string>

namespace chibsel {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad dimensions, parameters or configuration documents. CLI exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Caller misuse: mismatched chains, lengths, grids.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Numerical failures. CLI exit code 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class SymmetryError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InsufficientSamplesError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SizeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class DefinitenessError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Integrand mass reaches the edge of the integration box.
class BoundaryError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace chibsel
