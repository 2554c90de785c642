#pragma once

#include <stdexcept>
#include <string>

namespace iqaforge {

// Base class for every failure raised by the library. The CLI maps these to
// exit code 1; anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or malformed image file.
class DecodeError : public Error {
 public:
  using Error::Error;
};

// Image dimensions incompatible with the requested operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Argument outside the operation's domain (negative sigma, q > 100, k <= 0...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed tabular or JSON input.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Logistic fit could not produce a finite parameter set.
class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace iqaforge
