#pragma once
// Per-dimension linear model of the stochastic gradient, g ~ a * mu + b,
// fitted online by a Kalman filter whose state (a, b) follows a Gaussian
// random walk with variance q and whose observations carry noise r. The
// filter mean is the slope/intercept pair of the quadratic surrogate.

#include <cstddef>
#include <span>
#include <vector>

namespace arturo {

struct SurrogateState {
  std::vector<double> a;
  std::vector<double> b;
  // Unique entries of each dimension's symmetric 2x2 covariance.
  std::vector<double> p11;
  std::vector<double> p12;
  std::vector<double> p22;

  std::size_t size() const noexcept { return a.size(); }
};

/// Zero mean, covariance p0 * I in every dimension.
SurrogateState init_state(std::size_t n, double p0);

/// Throws std::invalid_argument naming the first violated invariant.
void validate(const SurrogateState& state);

/// One filter step per dimension, observing gradient g at location mu.
///
/// Throws std::invalid_argument for mismatched lengths, non-finite inputs,
/// q < 0 or r <= 0, and InternalConsistencyError if any covariance loses
/// positive definiteness (the state is left updated in that case).
void filter_update(SurrogateState& state, std::span<const double> mu,
                   std::span<const double> g, double q, double r);

/// Value-returning form of filter_update.
SurrogateState filter_updated(SurrogateState state, std::span<const double> mu,
                              std::span<const double> g, double q, double r);

struct SurrogateParams {
  std::span<const double> a;
  std::span<const double> b;
};

/// MAP estimate (a, b); views into the state.
inline SurrogateParams surrogate_params(const SurrogateState& state) noexcept {
  return {state.a, state.b};
}

}  // namespace arturo
