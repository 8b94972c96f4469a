#pragma once

#include <stdexcept>
#include <string>

namespace fiberband {

// Numerical failure: non-convergence, unbounded domains, out-of-range
// evaluation. Maps to CLI exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration failure with a field-path diagnostic ("profile.alpha",
// "line 12", ...). Maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& path, const std::string& msg)
      : std::runtime_error(path + ": " + msg), field_path(path) {}
  std::string field_path;
};

}  // namespace fiberband
