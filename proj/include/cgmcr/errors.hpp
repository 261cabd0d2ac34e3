#pragma once

#include <stdexcept>
#include <string>

namespace cgmcr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of the operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A scalar or count argument is out of its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Factorization or numeric breakdown (non-SPD, NaN gradients, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Affinity graph has an isolated node, so normalized-cut volumes are undefined.
class DegenerateGraphError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Malformed file on disk: bad magic, truncation, non-finite values.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. running backward with a cache from an older forward.
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace cgmcr
