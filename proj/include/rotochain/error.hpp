#pragma once

#include <stdexcept>
#include <string>

namespace rotochain {

/// Raised when a computation is well-posed but fails numerically
/// (non-convergence, blow-up, violated physical constraint).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violations use std::invalid_argument.

}  // namespace rotochain
