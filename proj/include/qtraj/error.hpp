#pragma once

#include <stdexcept>
#include <string>

namespace qtraj {

/// Numerical or runtime failure inside the simulator or filter.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace qtraj
