#pragma once

#include <stdexcept>
#include <string>

namespace levykin {

// Invalid parameters / configuration. CLI maps this to exit code 1.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical non-convergence (quadrature refinement disagreement, solver
// breakdown, interpolation validation failure). CLI exit code 2.
struct NumericsError : std::runtime_error {
    explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

// A statistical acceptance test rejected. CLI exit code 3.
struct StatTestFailure : std::runtime_error {
    explicit StatTestFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace levykin
