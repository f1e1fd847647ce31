#pragma once

#include <stdexcept>
#include <string>

namespace fsgauge {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate an operation's preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input data (files, feature sets) is malformed or fails validation.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed: divergence, non-convergence, zero variance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

[[noreturn]] void throw_invalid(const std::string& what);
[[noreturn]] void throw_data(const std::string& what);
[[noreturn]] void throw_numerical(const std::string& what);

}  // namespace fsgauge
