#pragma once

#include <stdexcept>
#include <string>

namespace stablewalk {

// Invalid parameters, malformed configs, model files that fail validation.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Filesystem-level failures (missing files, unwritable output directories).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// A Monte Carlo procedure gave up: acceptance rate below floor, survivor
// starvation, extrapolation fraction too high. Distinct from bad inputs.
class StatisticalAbort : public std::runtime_error {
 public:
  explicit StatisticalAbort(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stablewalk
