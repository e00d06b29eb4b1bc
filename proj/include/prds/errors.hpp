#pragma once

#include <stdexcept>
#include <string>

namespace prds {

// Error families map to CLI exit codes: validation -> 2, internal -> 3, io -> 4.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InternalInconsistency : std::logic_error {
    using std::logic_error::logic_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidModulus : ValidationError { using ValidationError::ValidationError; };
struct InvalidPrecision : ValidationError { using ValidationError::ValidationError; };
struct IncompatibleOperands : ValidationError { using ValidationError::ValidationError; };
struct PrecisionExceeded : ValidationError { using ValidationError::ValidationError; };
struct NotAUnit : ValidationError { using ValidationError::ValidationError; };
struct NotOnSphere : ValidationError { using ValidationError::ValidationError; };
struct NotAUnitModQ : ValidationError { using ValidationError::ValidationError; };
struct NotInvariant : ValidationError { using ValidationError::ValidationError; };

// A seed-independence violation: attractors must not depend on the noise path.
struct ModelViolation : InternalInconsistency { using InternalInconsistency::InternalInconsistency; };

} // namespace prds
