#pragma once
// Exception taxonomy shared by every module. The CLI maps these to process
// exit codes: ConfigError/ArgumentError -> 2, DataError -> 3, NumericError -> 4.
#include <stdexcept>

namespace aegcn {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operand shapes do not line up.
struct DimensionError : Error { using Error::Error; };

// Invalid argument values: empty lists, empty masks, out-of-range ids.
struct ArgumentError : Error { using Error::Error; };

// Zero row sum where a positive degree is required by a normalization.
struct DegenerateDegreeError : ArgumentError { using ArgumentError::ArgumentError; };

// Dataset files missing, malformed, or failing validation.
struct DataError : Error { using Error::Error; };

// Inconsistent or unsatisfiable run configuration.
struct ConfigError : Error { using Error::Error; };

// Non-finite values where finite ones are required; aborts training.
struct NumericError : Error { using Error::Error; };

}  // namespace aegcn
