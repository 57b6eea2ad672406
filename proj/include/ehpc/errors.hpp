#pragma once

#include <stdexcept>
#include <string>

namespace ehpc {

/// Root of every error the library throws. The CLI maps subclasses onto its
/// exit-code contract, so new failure kinds should derive from one of the
/// categories below rather than from Error directly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exit code 2 family.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class PlacementError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class LookupError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class CapabilityError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// Exit code 3.
class IoError : public Error {
 public:
  using Error::Error;
};

// Exit code 4 family.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class LengthError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class CoverageError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace ehpc
