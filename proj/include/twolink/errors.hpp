#pragma once
#include <stdexcept>
#include <string>

namespace twolink {

/// Metric matrix is not positive definite where an inverse is required.
struct DegenerateMetricError : std::runtime_error {
    explicit DegenerateMetricError(const std::string& what) : std::runtime_error(what) {}
};

/// A state or derived quantity stopped being finite during integration.
struct NonFiniteError : std::runtime_error {
    double time;
    explicit NonFiniteError(double t, const std::string& what)
        : std::runtime_error(what), time(t) {}
};

/// Newton projection onto the constraint did not converge.
struct NoConvergenceError : std::runtime_error {
    explicit NoConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Constraint gradient vanished where the algorithm needs a direction.
struct SingularGradientError : std::runtime_error {
    explicit SingularGradientError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed scenario document.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Well-formed scenario that violates an invariant; message names the field.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace twolink
