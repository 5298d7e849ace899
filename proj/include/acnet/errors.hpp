// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace acnet {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Shape mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Value outside an operation's numeric domain (log of a non-positive
/// value, zero-norm row, non-finite result).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// API contract violation, e.g. backward from a non-scalar node.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File read/write or serialization failure.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Manifest parse failure; carries a JSON-pointer-style location.
class ParseError : public IoError {
 public:
  ParseError(const std::string& location, const std::string& what)
      : IoError(location + ": " + what), location_(location) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

/// Manifest loaded but cross-references or invariants do not hold.
class IntegrityError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace acnet
