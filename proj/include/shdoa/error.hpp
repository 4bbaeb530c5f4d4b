#pragma once

#include <stdexcept>
#include <string>

namespace shdoa {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Tensor / vector dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input collection empty or too small for the requested operation.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be read, written or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Decomposition radial term too close to zero.
class IllConditionedError : public Error {
 public:
  using Error::Error;
};

}  // namespace shdoa
