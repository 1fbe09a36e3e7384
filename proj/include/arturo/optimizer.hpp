#pragma once
// The full trust-region step: fit the gradient surrogate, shrink or grow the
// variance, pick the dual multiplier, move the mean, decay.

#include "arturo/surrogate_filter.hpp"
#include "arturo/trust_region.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace arturo {

enum class ArturoMode {
  standard,
  fixed_eta,              // skip the dual solve, use ArturoConfig::fixed_eta
  adam_moment_surrogate,  // (a, b) from Adam moments instead of the filter
};

std::string_view mode_name(ArturoMode mode);

enum class WeightDecayMode {
  decoupled,  // mu <- mu * (1 - wd) after the trust-region update
  coupled,    // g <- g + wd * mu before the surrogate fit
};

struct ArturoConfig {
  double epsilon = 0.085675;
  double rho = 0.058657;
  double nu = 1.3;
  double lambda_prec = 0.0015;
  double q = 0.017393;
  double r = 2.816791;
  double sigma2_init = 0.01;
  double p0 = 0.00005;
  double weight_decay = 0.0;
  WeightDecayMode weight_decay_mode = WeightDecayMode::decoupled;
  double epsilon_decay_factor = 0.006;
  std::vector<std::size_t> schedule_milestones;  // strictly increasing epochs

  ArturoMode mode = ArturoMode::standard;
  double fixed_eta = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  BisectionOptions bisection;
  double eta_warm_floor = 1e-6;
  double eta_warm_init = 1.0;
};

void validate(const ArturoConfig& cfg);

/// Milestones at floor(0.5 E) and floor(0.75 E), deduplicated, zeros dropped.
std::vector<std::size_t> default_milestones(std::size_t total_epochs);

struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t t = 0;
};

struct ArturoState {
  ParameterDistribution dist;
  SurrogateState filter;
  DualState dual;
  double epsilon = 0.0;  // current scheduled bound
  std::size_t step_count = 0;
  std::size_t epoch = 0;
  AdamMoments adam;  // only used in adam_moment_surrogate mode

  std::size_t size() const noexcept { return dist.size(); }
};

struct StepDiagnostics {
  double eta = 0.0;
  double c_mu = 0.0;
  int bisection_iterations = 0;
  int dual_evaluations = 0;
  std::size_t clamp_count = 0;  // dimensions with negative fitted curvature
  bool interior = false;
};

ArturoState init(std::size_t n, const ArturoConfig& cfg,
                 std::span<const double> mu0);

/// Replaces solve_eta inside step(); used to pin eta in tests and ablations.
using EtaSolverFn = std::function<EtaSolution(
    std::span<const double> a, std::span<const double> b,
    const ParameterDistribution& prev, const TrustRegionParams& tr,
    const DualState& dual)>;

/// Advances the state by one optimizer step. Throws NonFiniteError (carrying
/// the step index) for non-finite gradients, and propagates SolverFailure.
StepDiagnostics step(ArturoState& state, std::span<const double> grad,
                     const ArturoConfig& cfg,
                     const EtaSolverFn& solver_override = {});

/// Epoch bookkeeping and the epsilon schedule.
void on_epoch_end(ArturoState& state, const ArturoConfig& cfg);

}  // namespace arturo
