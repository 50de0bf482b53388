#pragma once

#include <stdexcept>
#include <string>

namespace lrcalib {

// Root of the library error hierarchy. The three families map onto the
// CLI exit codes: ConfigError -> 2, IoError -> 3, NumericError -> 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

struct ZeroVectorError : NumericError {
    using NumericError::NumericError;
};
struct DimensionMismatchError : NumericError {
    using NumericError::NumericError;
};
struct EmptyInputError : NumericError {
    using NumericError::NumericError;
};
struct EmptyClassError : NumericError {
    using NumericError::NumericError;
};
struct InsufficientPoolError : NumericError {
    using NumericError::NumericError;
};
struct InsufficientBaseClassesError : NumericError {
    using NumericError::NumericError;
};
struct InsufficientClassesError : NumericError {
    using NumericError::NumericError;
};
struct EmptyPoolError : NumericError {
    using NumericError::NumericError;
};
struct DegenerateRadiusError : NumericError {
    using NumericError::NumericError;
};
struct NegativeLossError : NumericError {
    using NumericError::NumericError;
};
struct NonpositiveWeightError : NumericError {
    using NumericError::NumericError;
};

struct InvalidConfigError : ConfigError {
    using ConfigError::ConfigError;
};
struct InvalidGridError : ConfigError {
    using ConfigError::ConfigError;
};

struct CheckpointMismatchError : IoError {
    using IoError::IoError;
};
struct MetricsParseError : IoError {
    using IoError::IoError;
};

}  // namespace lrcalib
