#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace memsyn {

/// Base of every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

/// Value outside an anchored or tabulated range (no extrapolation).
struct RangeError : Error {
  using Error::Error;
};

/// Inconsistent or incomplete configuration (uncalibrated law, io arity...).
struct ConfigurationError : Error {
  using Error::Error;
};

/// Malformed document or file. `what()` carries the location.
struct ParseError : Error {
  using Error::Error;
};

/// Well-formed input that does not match the expected schema.
struct SchemaError : Error {
  using Error::Error;
};

struct SplitError : Error {
  using Error::Error;
};

/// Object used before it reached the required state (e.g. unfitted encoder).
struct StateError : Error {
  using Error::Error;
};

/// A network that breaks one or more structural invariants.
struct ValidationError : Error {
  explicit ValidationError(std::vector<std::string> v)
      : Error(join(v)), violations(std::move(v)) {}

  std::vector<std::string> violations;

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid network:";
    for (const auto& s : v) {
      out += ' ';
      out += s;
      out += ';';
    }
    return out;
  }
};

}  // namespace memsyn
