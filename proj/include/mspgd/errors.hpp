#pragma once

#include <stdexcept>
#include <string>

namespace mspgd {

/// Invalid or inconsistent configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical failure (rank deficiency, undefined metric, infeasible
/// timing). Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Angle-of-arrival series with zero spread: the Fried parameter is infinite.
class NoTurbulenceError : public NumericalError {
 public:
  NoTurbulenceError() : NumericalError("no measurable turbulence (zero angle-of-arrival spread)") {}
};

}  // namespace mspgd
