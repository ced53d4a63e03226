#pragma once

#include <stdexcept>
#include <string>

namespace mvgf {

/// Invalid input, configuration or violated precondition.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure: non-finite values, solver stagnation, step failure.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mvgf
