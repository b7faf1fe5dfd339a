#pragma once

#include <stdexcept>
#include <string>

namespace detbound {

// Numerical or mathematical failure on admissible input. The CLI maps these to
// exit status 1; precondition violations use std::invalid_argument instead.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Gram matrix not positive definite after symmetrization.
class DegenerateMetricError : public DomainError {
 public:
  DegenerateMetricError(int degree, double condition)
      : DomainError("degenerate metric for O(" + std::to_string(degree) +
                    "): Gram matrix not positive definite (condition estimate " +
                    std::to_string(condition) + ")"),
        degree_(degree),
        condition_(condition) {}

  int degree() const noexcept { return degree_; }
  double condition() const noexcept { return condition_; }

 private:
  int degree_;
  double condition_;
};

// An integral over the truncated window does not converge (tail mass too large
// or the integrand grows at the window edge).
class DivergenceError : public DomainError {
 public:
  using DomainError::DomainError;
};

// A level or root is not attained inside the sampled window.
class WindowError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Quadrature did not converge under refinement.
class QuadratureError : public DomainError {
 public:
  using DomainError::DomainError;
};

// ODE integration missed the requested tolerance.
class AccuracyError : public DomainError {
 public:
  AccuracyError(const std::string& what, double achieved)
      : DomainError(what + " (achieved " + std::to_string(achieved) + ")"), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

}  // namespace detbound
