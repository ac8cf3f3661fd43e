#pragma once

#include <stdexcept>
#include <string>

namespace bsde {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arguments outside an operation's documented domain (q <= kappa, x < 0, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Ill-formed or inconsistent run configuration, including refused weights.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class CatalogError : public Error {
 public:
  using Error::Error;
};

/// Requested ensemble exceeds the configured storage cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Backward solver failure. `step` is the time index, or -1 for global failures.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, int step, double residual)
      : Error(what), step_(step), residual_(residual) {}

  int step() const noexcept { return step_; }
  double residual() const noexcept { return residual_; }

 private:
  int step_;
  double residual_;
};

}  // namespace bsde
