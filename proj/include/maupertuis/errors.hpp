#pragma once

#include <stdexcept>
#include <string>

namespace maupertuis {

// Numerical failures that callers may want to catch separately from
// plain contract violations (which throw std::invalid_argument).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Panel doubling stalled before reaching the requested tolerance.
struct NonConvergent : NumericalError {
  using NumericalError::NumericalError;
};

// Verlet step does not resolve the 1/eps forcing.
struct StepTooLarge : NumericalError {
  using NumericalError::NumericalError;
};

// Monotone inversion lost its bracket; indicates an internal bug.
struct RootNotBracketed : NumericalError {
  using NumericalError::NumericalError;
};

// Requested level set of V is empty.
struct NoRoot : NumericalError {
  using NumericalError::NumericalError;
};

// Energy bracket for the fixed-time boundary value problem underflowed.
struct BracketFailure : NumericalError {
  using NumericalError::NumericalError;
};

// Line search stalled while the gradient was still above tolerance.
struct NoDescent : NumericalError {
  using NumericalError::NumericalError;
};

// Zero-length curve segment where a tangent is required.
struct DegenerateSegment : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace maupertuis
