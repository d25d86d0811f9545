#pragma once

#include <stdexcept>
#include <string>

namespace cdg {

// Shape or length mismatch between operands; a programming or input error.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bad or inconsistent configuration (unknown keys, out-of-range values,
// a template bank paired with the wrong projection seed).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative solver failed to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cdg
