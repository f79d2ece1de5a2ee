#pragma once

#include <stdexcept>
#include <string>

namespace padkit {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied an argument or configuration that violates a precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Input data (files, manifests, images) is missing, unreadable or malformed.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity showed up in a loss, activation or gradient.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace padkit
