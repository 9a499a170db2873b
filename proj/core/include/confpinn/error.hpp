#pragma once

#include <stdexcept>
#include <string>

namespace confpinn {

/// Base class of every error raised by the library. The CLI maps each
/// subclass to its own exit code.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid sizes, out-of-range hyperparameters, inconsistent configs.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Mismatched dimensions between a model, a batch or paired vectors.
class ShapeError : public Error {
  public:
    using Error::Error;
};

/// A non-finite value appeared where a finite one is required.
class NumericError : public Error {
  public:
    using Error::Error;
};

/// Malformed file content (CSV, model files, config files).
class ParseError : public Error {
  public:
    using Error::Error;
};

/// File system failures.
class IoError : public Error {
  public:
    using Error::Error;
};

} // namespace confpinn
