#include "arturo/trust_region.hpp"

#include "arturo/errors.hpp"
#include "arturo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace arturo {

void validate(const ParameterDistribution& dist) {
  if (dist.mu.empty()) throw std::invalid_argument("distribution is empty");
  if (dist.sigma2.size() != dist.mu.size()) {
    throw std::invalid_argument("distribution: mu/sigma2 length mismatch");
  }
  for (std::size_t j = 0; j < dist.mu.size(); ++j) {
    if (!std::isfinite(dist.mu[j])) {
      throw std::invalid_argument("distribution: non-finite mean at " +
                                  std::to_string(j));
    }
    if (!(dist.sigma2[j] > 0.0) || !std::isfinite(dist.sigma2[j])) {
      throw std::invalid_argument("distribution: variance not positive at " +
                                  std::to_string(j));
    }
  }
}

void validate(const TrustRegionParams& tr) {
  auto finite_pos = [](double x) { return x > 0.0 && std::isfinite(x); };
  auto finite_nonneg = [](double x) { return x >= 0.0 && std::isfinite(x); };
  if (!finite_pos(tr.epsilon)) throw std::invalid_argument("epsilon must be > 0");
  if (!finite_pos(tr.nu)) throw std::invalid_argument("nu must be > 0");
  if (!finite_nonneg(tr.rho)) throw std::invalid_argument("rho must be >= 0");
  if (!finite_nonneg(tr.lambda_prec)) {
    throw std::invalid_argument("lambda must be >= 0");
  }
}

namespace {

void check_lengths(std::size_t n, std::span<const double> a,
                   std::span<const double> b, const ParameterDistribution& prev) {
  if (a.size() != n || b.size() != n || prev.mu.size() != n ||
      prev.sigma2.size() != n) {
    throw std::invalid_argument("trust region: length mismatch");
  }
}

// Denominators a_j + eta/s2_j + rho*lambda are positive whenever eta > 0 and
// a_j >= 0; at eta = 0 a single curvature-free dimension makes them vanish.
void check_denominators_at_zero(std::span<const double> a, double rho_lambda) {
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!(a[j] + rho_lambda > 0.0)) {
      throw DomainError("primal_mean: non-positive denominator at dimension " +
                            std::to_string(j) + " (eta = 0)",
                        j);
    }
  }
}

bool zero_eta_defined(std::span<const double> a, double rho_lambda) {
  return std::all_of(a.begin(), a.end(),
                     [&](double aj) { return aj + rho_lambda > 0.0; });
}

}  // namespace

void primal_mean_into(std::span<const double> a, std::span<const double> b,
                      const ParameterDistribution& prev, double eta,
                      const TrustRegionParams& tr, std::span<double> out) {
  const std::size_t n = prev.size();
  check_lengths(n, a, b, prev);
  if (out.size() != n) throw std::invalid_argument("primal_mean: bad output");
  if (!(eta >= 0.0)) throw std::invalid_argument("primal_mean: eta must be >= 0");
  if (eta == 0.0) check_denominators_at_zero(a, tr.rho_lambda());
  kernels::active().primal_mean(n, a.data(), b.data(), prev.mu.data(),
                                prev.sigma2.data(), eta, tr.rho_lambda(),
                                out.data());
}

std::vector<double> primal_mean(std::span<const double> a,
                                std::span<const double> b,
                                const ParameterDistribution& prev, double eta,
                                const TrustRegionParams& tr) {
  std::vector<double> out(prev.size());
  primal_mean_into(a, b, prev, eta, tr, out);
  return out;
}

void primal_variance_into(std::span<const double> a,
                          const ParameterDistribution& prev,
                          const TrustRegionParams& tr, std::span<double> out) {
  const std::size_t n = prev.size();
  if (a.size() != n || prev.sigma2.size() != n || out.size() != n) {
    throw std::invalid_argument("primal_variance: length mismatch");
  }
  kernels::active().primal_variance(n, a.data(), prev.sigma2.data(), tr.rho,
                                    tr.nu, tr.rho_lambda(), out.data());
}

std::vector<double> primal_variance(std::span<const double> a,
                                    const ParameterDistribution& prev,
                                    const TrustRegionParams& tr) {
  std::vector<double> out(prev.size());
  primal_variance_into(a, prev, tr, out);
  return out;
}

double kl_mean_term(std::span<const double> mu_new,
                    const ParameterDistribution& prev) {
  if (mu_new.size() != prev.size() || prev.sigma2.size() != prev.size()) {
    throw std::invalid_argument("kl_mean_term: length mismatch");
  }
  return kernels::active().kl_mean_term(prev.size(), mu_new.data(),
                                        prev.mu.data(), prev.sigma2.data());
}

double dual_derivative(double eta, std::span<const double> a,
                       std::span<const double> b,
                       const ParameterDistribution& prev,
                       const TrustRegionParams& tr) {
  check_lengths(prev.size(), a, b, prev);
  if (!(eta >= 0.0)) {
    throw std::invalid_argument("dual_derivative: eta must be >= 0");
  }
  if (eta == 0.0) check_denominators_at_zero(a, tr.rho_lambda());
  return kernels::active().kl_mean_at_eta(prev.size(), a.data(), b.data(),
                                          prev.mu.data(), prev.sigma2.data(),
                                          eta, tr.rho_lambda()) -
         tr.epsilon;
}

EtaSolution solve_eta(std::span<const double> a, std::span<const double> b,
                      const ParameterDistribution& prev,
                      const TrustRegionParams& tr, const DualState& dual,
                      const BisectionOptions& opts) {
  const std::size_t n = prev.size();
  check_lengths(n, a, b, prev);
  validate(tr);
  for (std::size_t j = 0; j < n; ++j) {
    if (!(a[j] >= 0.0)) {
      throw std::invalid_argument("solve_eta: negative curvature at " +
                                  std::to_string(j));
    }
  }
  if (!(dual.eta_warm >= 0.0) || !std::isfinite(dual.eta_warm)) {
    throw std::invalid_argument("solve_eta: warm start must be finite, >= 0");
  }

  const auto& k = kernels::active();
  const double rl = tr.rho_lambda();
  const double eps = tr.epsilon;
  EtaSolution sol;

  auto gprime = [&](double eta) {
    ++sol.evaluations;
    return k.kl_mean_at_eta(n, a.data(), b.data(), prev.mu.data(),
                            prev.sigma2.data(), eta, rl) -
           eps;
  };
  auto finish = [&](double eta) {
    sol.eta = eta;
    sol.mu = primal_mean(a, b, prev, eta, tr);
    sol.c_mu = kl_mean_term(sol.mu, prev);
    return sol;
  };
  auto converged = [&](double gp) { return std::abs(gp) < opts.tolerance * eps; };

  const double warm = std::clamp(dual.eta_warm, opts.eta_min, opts.eta_max);
  double lo = std::max(warm / opts.expansion, opts.eta_min);
  double hi = std::min(warm * opts.expansion, opts.eta_max);
  double g_lo = gprime(lo);
  double g_hi = gprime(hi);
  bool tried_zero = false;
  const bool zero_ok = zero_eta_defined(a, rl);

  // Shift the bracket geometrically until g'(lo) > 0 >= g'(hi). Because C_mu
  // is monotone only one side can be wrong at a time.
  while (!(g_lo > 0.0) || g_hi > 0.0) {
    if (g_hi > 0.0) {
      if (hi >= opts.eta_max) {
        std::ostringstream msg;
        msg << "solve_eta: C_mu exceeds epsilon at eta_max; last bracket ["
            << lo << ", " << hi << "]";
        throw SolverFailure(msg.str(), lo, hi);
      }
      lo = hi;
      g_lo = g_hi;
      hi = std::min(hi * opts.expansion, opts.eta_max);
      g_hi = gprime(hi);
      continue;
    }
    // g'(lo) <= 0: the unconstrained optimum may lie inside the region.
    if (zero_ok && !tried_zero) {
      tried_zero = true;
      if (gprime(0.0) <= 0.0) {
        sol.interior = true;
        return finish(0.0);
      }
    }
    if (lo <= opts.eta_min) {
      sol.interior = true;
      return finish(opts.eta_min);
    }
    hi = lo;
    g_hi = g_lo;
    lo = std::max(lo / opts.expansion, opts.eta_min);
    g_lo = gprime(lo);
  }

  if (converged(g_hi)) return finish(hi);
  if (converged(g_lo)) return finish(lo);

  while (sol.iterations < opts.max_iterations) {
    const double width = hi - lo;
    if (width < opts.abs_width && width < opts.rel_width * hi) break;
    const double mid = 0.5 * (lo + hi);
    const double gm = gprime(mid);
    ++sol.iterations;
    if (converged(gm)) return finish(mid);
    if (gm > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // The upper end is always feasible (C_mu <= epsilon).
  return finish(hi);
}

}  // namespace arturo
