#pragma once

#include <stdexcept>
#include <string>

namespace linprobit {

/// Numerical inconsistency detected at runtime (non-SPD operator, arcsine
/// argument out of range, MSE outside its feasible interval, ...).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An estimator is not defined for the given problem (e.g. the LS estimator
/// when M < N or E is rank deficient).
struct EstimatorUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dataset ingestion failure; the message names the offending row/column.
struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed run configuration; the message names the offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace linprobit
