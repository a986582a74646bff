#pragma once

#include <stdexcept>
#include <string>

namespace pedhorizon {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value; the message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Inputs outside an operation's domain (empty run sets, out-of-range horizons).
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace pedhorizon
