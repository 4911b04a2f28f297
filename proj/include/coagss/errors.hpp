#pragma once

#include <stdexcept>
#include <string>

namespace coagss {

// Invalid user configuration (bad grid, inadmissible exponents, malformed files).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mathematical domain violation: nonpositive sizes, divergent integrals.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/overflow or breakdown inside a numerical procedure.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace coagss
