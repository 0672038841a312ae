#pragma once

#include <stdexcept>
#include <string>

namespace dfseg {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid input data or configuration (CLI exit code 1).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Tensor extents that do not fit an operation.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// File could not be opened, read or written (CLI exit code 2).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dfseg
