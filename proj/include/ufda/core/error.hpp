#pragma once

#include <stdexcept>
#include <string>

namespace ufda {

// Base for every error raised by the library. Subclasses name the contract
// that was violated so callers (and the CLI) can report it precisely.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller handed us something outside an operation's precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

// Shapes or feature dimensions do not line up.
class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

// Input is well-formed but the operation has no meaningful result on it
// (zero-norm cosine, constant vector instance statistics, empty background).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Operations called out of order (e.g. domain entropy before C_d is frozen).
class SequencingError : public Error {
 public:
  using Error::Error;
};

// A loss or parameter went non-finite.
class NumericError : public Error {
 public:
  using Error::Error;
};

// On-disk data is malformed, truncated, or from an incompatible version.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace ufda
