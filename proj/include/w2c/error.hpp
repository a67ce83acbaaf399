#pragma once

#include <stdexcept>
#include <string>

namespace w2c {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Zero-norm vectors, empty rows and similar inputs a numeric op cannot
/// give a meaningful answer for.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Shapes or sizes that disagree (matrix dims, h/n/k between artifacts).
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Two artifacts or an artifact and the run configuration disagree.
class ConfigMismatchError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A loss or gradient became NaN or infinite.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

}  // namespace w2c
