#pragma once

#include <stdexcept>
#include <string>

namespace uqt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input file is missing mandatory columns or is otherwise malformed.
class SchemaError : public Error { using Error::Error; };
// Input values violate a data invariant (ordering, spacing, duplicates).
class DataError : public Error { using Error::Error; };
// Invalid user configuration or hyperparameters.
class ConfigError : public Error { using Error::Error; };
class SplitError : public Error { using Error::Error; };
class FitError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class CalibrationError : public Error { using Error::Error; };
// Raised when the calibration set cannot support the requested significance level.
class InsufficientCalibrationError : public CalibrationError { using CalibrationError::CalibrationError; };
class TrainingError : public Error { using Error::Error; };
class ModelError : public Error { using Error::Error; };
class MetricError : public Error { using Error::Error; };
class LeakageError : public Error { using Error::Error; };

}  // namespace uqt
