#pragma once

#include <stdexcept>
#include <string>

namespace sea {

// Base for every error raised by the library. The CLI maps subclasses onto
// exit codes, so new error kinds should derive from one of the groups below.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or unreadable input (exit code 2 in the CLI).
class InputError : public Error {
 public:
  using Error::Error;
};

class FormatError : public InputError {
 public:
  using InputError::InputError;
};

class CorruptionError : public InputError {
 public:
  using InputError::InputError;
};

class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

class ParameterError : public InputError {
 public:
  using InputError::InputError;
};

// Projection requested onto an empty set of basis vectors.
class DegenerateBasisError : public InputError {
 public:
  using InputError::InputError;
};

class IoError : public InputError {
 public:
  using InputError::InputError;
};

// Raised when training produces a non-finite loss (exit code 3).
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t epoch, std::size_t batch, const std::string& what)
      : Error(what), epoch_(epoch), batch_(batch) {}

  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

}  // namespace sea
