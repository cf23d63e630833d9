#pragma once

#include <stdexcept>
#include <string>

namespace qdyn {

// Two error categories so the CLI can map exceptions onto exit codes:
// validation problems -> exit 3, runtime numerical problems -> exit 4.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidParams : ValidationError {
    using ValidationError::ValidationError;
};
struct NonFinite : ValidationError {
    using ValidationError::ValidationError;
};
struct Unsupported : ValidationError {
    using ValidationError::ValidationError;
};
struct NotNormalized : ValidationError {
    using ValidationError::ValidationError;
};
struct InconsistentFigureParams : ValidationError {
    using ValidationError::ValidationError;
};

struct StepSizeUnderflow : NumericalError {
    using NumericalError::NumericalError;
};
struct NonFiniteState : NumericalError {
    using NumericalError::NumericalError;
};
struct WindowTooSmall : NumericalError {
    using NumericalError::NumericalError;
};
struct NotUnimodal : NumericalError {
    using NumericalError::NumericalError;
};

} // namespace qdyn
