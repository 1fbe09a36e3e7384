#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace arturo {

/// Raised when an update produces a state that violates an invariant which
/// holds in exact arithmetic (e.g. a non-PD filter covariance).
class InternalConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A closed-form update is undefined for this input, e.g. a zero denominator
/// in the primal mean at eta = 0.
class DomainError : public std::domain_error {
 public:
  DomainError(const std::string& what, std::size_t dimension)
      : std::domain_error(what), dimension_(dimension) {}
  std::size_t dimension() const noexcept { return dimension_; }

 private:
  std::size_t dimension_;
};

/// Bracket expansion for the dual multiplier ran out of range.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, double lower, double upper)
      : std::runtime_error(what), lower_(lower), upper_(upper) {}
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }

 private:
  double lower_;
  double upper_;
};

/// Gradient, loss or input contained NaN/Inf.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace arturo
