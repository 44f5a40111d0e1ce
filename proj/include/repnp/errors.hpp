#pragma once

#include <stdexcept>
#include <string>

namespace repnp {

/// Base class for every error raised by the library. The CLI maps the
/// concrete subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands with incompatible dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument, configuration value or usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Missing, unreadable or malformed input data (images, kernels, checkpoints).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, solver breakdown or training divergence.
class NumericalFault : public Error {
 public:
  using Error::Error;
};

}  // namespace repnp
