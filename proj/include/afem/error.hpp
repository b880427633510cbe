#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace afem {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MeshError : Error {
    using Error::Error;
};

/// Raised when a field or matrix is used with a mesh generation it was not built on.
struct GenerationMismatch : Error {
    using Error::Error;
};

struct SolverError : Error {
    using Error::Error;
};

/// Negative or zero curvature p.Ap met inside conjugate gradients.
struct IndefiniteMatrixError : SolverError {
    IndefiniteMatrixError(const std::string& what, int step) : SolverError(what), step(step) {}
    int step;
};

struct ConfigError : Error {
    ConfigError(const std::string& what, int line = 0) : Error(what), line(line) {}
    int line;
};

/// A fatal failure inside the time loop, tagged with where it happened.
struct RunError : Error {
    RunError(const std::string& what, int step, std::string phase)
        : Error(what), step(step), phase(std::move(phase)) {}
    int step;
    std::string phase;
};

} // namespace afem
