#pragma once

#include <stdexcept>
#include <string>

namespace fbitw {

// Base for everything the library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Problems with the data handed to us (CLI maps these to exit code 2).
struct InputError : Error {
    using Error::Error;
};

// Problems arising during estimation (CLI maps these to exit code 3).
struct EstimationError : Error {
    using Error::Error;
};

struct InvalidInput : InputError {
    using InputError::InputError;
};
struct ParseError : InputError {
    using InputError::InputError;
};
struct EmptySeries : InputError {
    using InputError::InputError;
};
struct DegenerateSeries : InputError {
    using InputError::InputError;
};
struct StateError : InputError {
    using InputError::InputError;
};
struct NoBalancedBlock : InputError {
    using InputError::InputError;
};

struct RankError : EstimationError {
    using EstimationError::EstimationError;
};
struct SingularDesign : EstimationError {
    using EstimationError::EstimationError;
};
struct MaskedInput : EstimationError {
    using EstimationError::EstimationError;
};
struct CollinearLoadings : EstimationError {
    using EstimationError::EstimationError;
};
struct SingularSubBlock : EstimationError {
    using EstimationError::EstimationError;
};
struct InsufficientData : EstimationError {
    using EstimationError::EstimationError;
};
struct DegenerateDof : EstimationError {
    using EstimationError::EstimationError;
};
struct OrderConditionError : EstimationError {
    using EstimationError::EstimationError;
};

}  // namespace fbitw
