#pragma once

#include <stdexcept>
#include <string>

namespace nlrd {

/// Invalid scenario / sweep / solver configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operation called outside the exponent phase it is valid in.
struct PhaseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Quadrature projection did not converge (Parseval defect too large).
struct ProjectionError : std::runtime_error {
    ProjectionError(const std::string& msg, double defect_)
        : std::runtime_error(msg), defect(defect_) {}
    double defect;
};

/// Adaptive integrator could not continue (step size underflow etc).
struct IntegratorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace nlrd
