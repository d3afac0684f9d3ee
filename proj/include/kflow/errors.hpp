#pragma once

#include <stdexcept>
#include <string>

namespace kflow {

/// Invalid argument to an operation (shape mismatch, out-of-range input).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The requested problem has no solution in the admissible set
/// (infeasible moments, mismatched endpoint moments).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Floating-point breakdown: NaN, step underflow, failed factorization.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative method stopped at its iteration cap.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : NumericalError(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// The velocity lattice is too coarse to carry any collision.
class BuildError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A hard invariant of a run was violated (entropy increase, objective increase).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed or out-of-range run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kflow
