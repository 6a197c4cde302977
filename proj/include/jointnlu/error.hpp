#pragma once

#include <stdexcept>
#include <string>

namespace jointnlu {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes are not conformable for the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (datasets, labels, vocabularies).
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Corrupt or incompatible serialized file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace jointnlu
