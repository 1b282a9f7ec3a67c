#pragma once

#include <stdexcept>
#include <string>

namespace gkdv {

// Configuration problems (bad JSON, missing or out-of-range fields). The CLI
// maps these to exit status 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A documented precondition of an operation does not hold.
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numerical procedure failed: non-convergence, blow-up, a structural
// property that should hold (sign of an eigenvector, positivity) does not.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// decompose() was handed a state too far from the soliton family.
struct OutOfTubeError : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace gkdv
