#pragma once

#include <stdexcept>
#include <string>

namespace hcf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on a matrix argument was violated (caller bug).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// ZYX Euler extraction requested too close to pitch = ±π/2.
class GimbalLockError : public Error {
 public:
  using Error::Error;
};

/// Radial displacement queried at (or numerically at) the body origin.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Scenario configuration could not be parsed.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Scenario configuration parsed but violates a semantic rule.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace hcf
