#include "arturo/surrogate_filter.hpp"

#include "arturo/errors.hpp"
#include "arturo/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace arturo {

SurrogateState init_state(std::size_t n, double p0) {
  if (n == 0) throw std::invalid_argument("init_state: dimension must be >= 1");
  if (!(p0 > 0.0) || !std::isfinite(p0)) {
    throw std::invalid_argument("init_state: p0 must be positive and finite");
  }
  SurrogateState s;
  s.a.assign(n, 0.0);
  s.b.assign(n, 0.0);
  s.p11.assign(n, p0);
  s.p12.assign(n, 0.0);
  s.p22.assign(n, p0);
  return s;
}

void validate(const SurrogateState& s) {
  const std::size_t n = s.a.size();
  if (n == 0) throw std::invalid_argument("surrogate state is empty");
  if (s.b.size() != n || s.p11.size() != n || s.p12.size() != n ||
      s.p22.size() != n) {
    throw std::invalid_argument("surrogate state vectors differ in length");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(s.a[j]) || !std::isfinite(s.b[j]) ||
        !std::isfinite(s.p12[j])) {
      throw std::invalid_argument("surrogate state: non-finite entry at " +
                                  std::to_string(j));
    }
    if (!(s.p11[j] > 0.0) || !(s.p22[j] > 0.0) ||
        !(s.p11[j] * s.p22[j] - s.p12[j] * s.p12[j] > 0.0)) {
      throw std::invalid_argument(
          "surrogate state: covariance not positive definite at " +
          std::to_string(j));
    }
  }
}

namespace {

void check_finite(std::span<const double> v, const char* name) {
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!std::isfinite(v[j])) {
      throw std::invalid_argument(std::string("filter_update: non-finite ") +
                                  name + " at " + std::to_string(j));
    }
  }
}

}  // namespace

void filter_update(SurrogateState& state, std::span<const double> mu,
                   std::span<const double> g, double q, double r) {
  const std::size_t n = state.size();
  if (mu.size() != n || g.size() != n) {
    throw std::invalid_argument("filter_update: length mismatch");
  }
  if (!(q >= 0.0) || !std::isfinite(q)) {
    throw std::invalid_argument("filter_update: q must be finite and >= 0");
  }
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("filter_update: r must be finite and > 0");
  }
  check_finite(mu, "mu");
  check_finite(g, "gradient");

  kernels::FilterArrays arrays{state.a.data(), state.b.data(),
                               state.p11.data(), state.p12.data(),
                               state.p22.data()};
  const std::size_t bad =
      kernels::active().filter_update(n, arrays, mu.data(), g.data(), q, r);
  if (bad != 0) {
    throw InternalConsistencyError(
        "filter_update: " + std::to_string(bad) +
        " covariance(s) lost positive definiteness");
  }
}

SurrogateState filter_updated(SurrogateState state, std::span<const double> mu,
                              std::span<const double> g, double q, double r) {
  filter_update(state, mu, g, q, r);
  return state;
}

}  // namespace arturo
