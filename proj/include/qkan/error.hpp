#pragma once

#include <stdexcept>
#include <string>

namespace qkan {

// Exception families map onto CLI exit codes: ConfigError -> 2,
// DataError -> 3, NumericalError -> 4. Plain std::invalid_argument is
// used for precondition violations on library calls.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Least-squares fit on an enumerated frequency basis is ill-conditioned.
class DegenerateSpectrum : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Spline design matrix is rank deficient.
class FitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace qkan
