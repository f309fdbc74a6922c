#pragma once

#include <stdexcept>
#include <string>

namespace mvb {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration, including violated preconditions
/// on step sizes and grids.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain where an operation is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operation requested for a dynamics variant that does not support it.
class NotApplicable : public Error {
 public:
  using Error::Error;
};

/// Regime-specific analysis invoked on a model of the wrong regime.
class RegimeError : public Error {
 public:
  using Error::Error;
};

/// Solver failure: stagnation, blow-up, unresolved tails.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvb
