#pragma once

#include <stdexcept>
#include <string>

namespace holoseis {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller supplied something outside the contract: bad shapes, unknown names.
struct UsageError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct InvalidParameter : Error {
  using Error::Error;
};
struct MemoryBudgetError : Error {
  using Error::Error;
};

// Numerical failures. The CLI maps everything derived from this to exit 3.
struct NumericalError : Error {
  using Error::Error;
};
struct SingularityError : NumericalError {
  using NumericalError::NumericalError;
};
struct ResonanceError : NumericalError {
  using NumericalError::NumericalError;
};
struct NumericalBreakdown : NumericalError {
  using NumericalError::NumericalError;
};
struct ConstraintDegenerate : NumericalError {
  using NumericalError::NumericalError;
};
struct DivergenceError : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace holoseis
