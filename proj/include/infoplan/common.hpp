#pragma once
// Shared error types. Numeric helpers live next to the code that owns them.

#include <stdexcept>
#include <string>

namespace infoplan {

// An input matrix fails a structural requirement (shape, symmetry, PSD-ness).
struct InvalidMatrix : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A matrix that must be positive definite is not (singular or indefinite).
struct NotPositiveDefinite : std::domain_error {
  using std::domain_error::domain_error;
};

// A sensor state fails a structural requirement (dimension or geometry
// mismatch between operands).
struct InvalidState : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A planner exceeded its node budget or detected an internal inconsistency.
struct PlannerAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A suboptimality bound cannot be evaluated for the given model, e.g. the
// process noise has no positive eigenvalue floor.
struct BoundInapplicable : std::domain_error {
  using std::domain_error::domain_error;
};

// Malformed configuration input.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace infoplan
