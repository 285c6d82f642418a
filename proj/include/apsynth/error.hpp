#pragma once

#include <stdexcept>
#include <string>

namespace apsynth {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller passed dimensions, parameters or data that violate a precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A file could not be read or written, or its contents are malformed.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A layout or schedule could not be constructed within its search budget.
class InfeasibleLayout : public Error {
 public:
  using Error::Error;
};

}  // namespace apsynth
