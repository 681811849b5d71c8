#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hartogs {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Expression text could not be parsed; offset is the byte position of the
// first offending character.
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t offset)
        : Error(msg + " (at byte " + std::to_string(offset) + ")"), offset(offset) {}
    std::size_t offset;
};

// Scene file rejected: schema violation, unknown key, inconsistent contents.
struct SceneError : Error {
    using Error::Error;
};

// A hypothesis of the extension theorem is violated (n = 1, non-holomorphic
// input, no exterior in the projection). Rejected before any computation.
struct HypothesisError : Error {
    using Error::Error;
};

// Geometric precondition failed: separation check, empty compact set, escape
// from the open set, degree mismatch while tracing, exhausted rho search.
struct GeometryError : Error {
    using Error::Error;
};

// Evaluation point too close to a contour edge. Callers evaluating grids may
// treat this per-point (exclusion) rather than as a run failure.
struct ProximityError : GeometryError {
    using GeometryError::GeometryError;
};

// Function evaluation failed: division by zero, overflow to non-finite,
// singularity at a quadrature node.
struct EvaluationError : Error {
    using Error::Error;
};

// A numerical cross-check exceeded its tolerance.
struct ToleranceError : Error {
    using Error::Error;
};

}  // namespace hartogs
