#pragma once

#include <stdexcept>
#include <string>

namespace goest {

// Invalid user-supplied configuration (matrices, parameters, files).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The joint state space is too large for the exact solver.
class StateSpaceCapError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// An iterative solver ran out of iterations.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace goest
