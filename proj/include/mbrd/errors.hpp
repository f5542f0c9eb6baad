#pragma once

#include <stdexcept>
#include <string>

namespace mbrd {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters, incompatible metric configuration, malformed strategy
// descriptors, and similar caller mistakes.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data: candidate files, embedding tables,
// scorer definitions, missing lookups.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace mbrd
