#pragma once

#include <stdexcept>
#include <string>

namespace ancsim {

// Base class for every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition of an operation was violated by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A configuration file or structured description is malformed or incomplete.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure could not produce a trustworthy result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A system-identification measurement did not contain a usable response.
class MeasurementError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ancsim
