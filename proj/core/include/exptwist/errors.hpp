#pragma once

#include <stdexcept>
#include <string>

namespace exptwist {

// A derivative or stencil evaluation produced NaN/Inf.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Every weight underflowed or the ensemble is otherwise unusable.
struct DegenerateEnsembleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// All sub-paths of a value estimate diverged.
struct EstimationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An internal invariant (e.g. acceptance probability in [0,1]) was violated;
// indicates corrupted inputs rather than bad luck.
struct InvariantViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation not defined for this model (e.g. singular diffusion without an
// analytic gradient).
struct UnsupportedModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Rejection sampling of the twisted initial law stopped making progress.
struct DegenerateTwistError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config parse/validation failure; carries 1-based line context when known.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg
                                      : msg),
          line_number(line) {}
    int line_number;
};

}  // namespace exptwist
