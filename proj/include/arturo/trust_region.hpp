#pragma once
// Closed-form primal updates of a diagonal Gaussian parameter distribution
// under a KL bound on the mean change, and the bisection search for the
// dual multiplier eta that enforces the bound.
//
// For a quadratic surrogate with diagonal curvature a and linear term b:
//
//   mu_j(eta)  = (eta * mu_prev_j / s2_j - b_j) / (a_j + eta / s2_j + rho*lambda)
//   sigma2_j   = (rho + nu) / (a_j + rho*lambda + nu / s2_j)
//   C_mu(eta)  = 0.5 * sum_j (mu_j(eta) - mu_prev_j)^2 / s2_j
//
// with s2 = sigma2_prev. C_mu is non-increasing in eta, so the dual
// derivative g'(eta) = C_mu(eta) - epsilon has at most one sign change.

#include <cstddef>
#include <span>
#include <vector>

namespace arturo {

struct ParameterDistribution {
  std::vector<double> mu;
  std::vector<double> sigma2;

  std::size_t size() const noexcept { return mu.size(); }
};

void validate(const ParameterDistribution& dist);

struct TrustRegionParams {
  double epsilon = 0.01;
  double rho = 1.0;
  double nu = 1.3;
  double lambda_prec = 0.0015;

  double rho_lambda() const noexcept { return rho * lambda_prec; }
};

/// epsilon and nu must be positive; rho and lambda_prec may be zero here so
/// the unregularized limits stay reachable (the optimizer config is stricter).
void validate(const TrustRegionParams& tr);

struct DualState {
  double eta_warm = 1.0;
};

/// Stopping rules of the bisection. The width rule fires only when the
/// bracket is narrow both in absolute terms and relative to its upper end.
struct BisectionOptions {
  double abs_width = 0.5;
  double rel_width = 0.05;
  double tolerance = 0.1;  // stop when |g'(eta)| < tolerance * epsilon
  double eta_min = 1e-12;
  double eta_max = 1e12;
  double expansion = 3.0;  // warm bracket is [eta/expansion, eta*expansion]
  int max_iterations = 200;
};

void primal_mean_into(std::span<const double> a, std::span<const double> b,
                      const ParameterDistribution& prev, double eta,
                      const TrustRegionParams& tr, std::span<double> out);

std::vector<double> primal_mean(std::span<const double> a,
                                std::span<const double> b,
                                const ParameterDistribution& prev, double eta,
                                const TrustRegionParams& tr);

void primal_variance_into(std::span<const double> a,
                          const ParameterDistribution& prev,
                          const TrustRegionParams& tr, std::span<double> out);

std::vector<double> primal_variance(std::span<const double> a,
                                    const ParameterDistribution& prev,
                                    const TrustRegionParams& tr);

double kl_mean_term(std::span<const double> mu_new,
                    const ParameterDistribution& prev);

double dual_derivative(double eta, std::span<const double> a,
                       std::span<const double> b,
                       const ParameterDistribution& prev,
                       const TrustRegionParams& tr);

struct EtaSolution {
  double eta = 0.0;
  std::vector<double> mu;
  double c_mu = 0.0;     // kl_mean_term(mu, prev)
  int iterations = 0;    // bisection midpoints evaluated
  int evaluations = 0;   // all g'(eta) evaluations, expansion included
  bool interior = false; // unconstrained optimum lies inside the region
};

/// Throws std::invalid_argument on bad inputs (including any a_j < 0) and
/// SolverFailure when C_mu still exceeds epsilon at opts.eta_max.
EtaSolution solve_eta(std::span<const double> a, std::span<const double> b,
                      const ParameterDistribution& prev,
                      const TrustRegionParams& tr, const DualState& dual,
                      const BisectionOptions& opts = {});

}  // namespace arturo
