#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace rhom {

/// Input outside its physical or contractual range. The message names the
/// offending quantity and the bound it violated.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inputs individually valid but mutually inconsistent (e.g. a 12.5-ns
/// indistinguishability below the transform-limit ratio).
class InconsistencyError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Energy conservation admits no pump for the requested conversion.
class NoSolutionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Quadrature grid cannot resolve the integrand.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A derived quantity is undefined for the supplied data (empty reference
/// window, zero side peaks, ...).
class UndefinedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration document rejected. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class... Args>
std::string concat(const Args&... args) {
  std::ostringstream os;
  os.precision(10);
  (os << ... << args);
  return os.str();
}

template <class Error = ValidationError, class... Args>
[[noreturn]] void fail(const Args&... args) {
  throw Error(concat(args...));
}

}  // namespace detail
}  // namespace rhom
