// errors.hpp — Exception types the contracts distinguish by kind.

#pragma once

#include <stdexcept>
#include <string>

namespace unravel {

// Trajectory norm collapsed below the degenerate-state threshold.
struct DegenerateStateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Arg requested of a (near-)vanishing overlap or ensemble mean.
struct UndefinedPhaseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A state invariant broke mid-integration; carries the offending step.
struct IntegrationError : std::runtime_error {
    IntegrationError(const std::string& what, long step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_index(step) {}
    long step_index;
};

}  // namespace unravel
