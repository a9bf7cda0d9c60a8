#pragma once

#include <stdexcept>
#include <string>

namespace desireme {

// Malformed arguments, shape mismatches, unreadable or unparsable inputs.
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// NaN/Inf produced, saturated probabilities, degenerate statistics.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InputError(message);
}

}  // namespace desireme
