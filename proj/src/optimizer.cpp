#include "arturo/optimizer.hpp"

#include "arturo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace arturo {

std::string_view mode_name(ArturoMode mode) {
  switch (mode) {
    case ArturoMode::standard:
      return "standard";
    case ArturoMode::fixed_eta:
      return "fixed-eta";
    case ArturoMode::adam_moment_surrogate:
      return "adam-surrogate";
  }
  return "unknown";
}

void validate(const ArturoConfig& cfg) {
  auto pos = [](double x) { return x > 0.0 && std::isfinite(x); };
  auto nonneg = [](double x) { return x >= 0.0 && std::isfinite(x); };
  struct Check {
    const char* name;
    bool ok;
  };
  const Check checks[] = {
      {"epsilon", pos(cfg.epsilon)},
      {"rho", pos(cfg.rho)},
      {"nu", pos(cfg.nu)},
      {"lambda", pos(cfg.lambda_prec)},
      {"q", nonneg(cfg.q)},
      {"r", pos(cfg.r)},
      {"sigma2_init", pos(cfg.sigma2_init)},
      {"p0", pos(cfg.p0)},
      {"weight_decay", nonneg(cfg.weight_decay) && cfg.weight_decay < 1.0},
      {"epsilon_decay_factor", pos(cfg.epsilon_decay_factor)},
      {"fixed_eta", nonneg(cfg.fixed_eta)},
      {"adam_beta1", nonneg(cfg.adam_beta1) && cfg.adam_beta1 < 1.0},
      {"adam_beta2", nonneg(cfg.adam_beta2) && cfg.adam_beta2 < 1.0},
      {"adam_eps", pos(cfg.adam_eps)},
      {"eta_warm_floor", pos(cfg.eta_warm_floor)},
      {"eta_warm_init", pos(cfg.eta_warm_init)},
  };
  for (const auto& c : checks) {
    if (!c.ok) {
      throw std::invalid_argument(std::string("arturo config: invalid ") +
                                  c.name);
    }
  }
  const auto& ms = cfg.schedule_milestones;
  for (std::size_t i = 1; i < ms.size(); ++i) {
    if (ms[i] <= ms[i - 1]) {
      throw std::invalid_argument(
          "arturo config: milestones must be strictly increasing");
    }
  }
}

std::vector<std::size_t> default_milestones(std::size_t total_epochs) {
  std::vector<std::size_t> out;
  for (std::size_t m : {total_epochs / 2, (3 * total_epochs) / 4}) {
    if (m > 0 && (out.empty() || out.back() < m)) out.push_back(m);
  }
  return out;
}

ArturoState init(std::size_t n, const ArturoConfig& cfg,
                 std::span<const double> mu0) {
  validate(cfg);
  if (n == 0) throw std::invalid_argument("arturo init: n must be >= 1");
  if (mu0.size() != n) {
    throw std::invalid_argument("arturo init: mu0 has length " +
                                std::to_string(mu0.size()) + ", expected " +
                                std::to_string(n));
  }
  ArturoState s;
  s.dist.mu.assign(mu0.begin(), mu0.end());
  s.dist.sigma2.assign(n, cfg.sigma2_init);
  validate(s.dist);
  s.filter = init_state(n, cfg.p0);
  s.dual.eta_warm = cfg.eta_warm_init;
  s.epsilon = cfg.epsilon;
  if (cfg.mode == ArturoMode::adam_moment_surrogate) {
    s.adam.m.assign(n, 0.0);
    s.adam.v.assign(n, 0.0);
  }
  return s;
}

namespace {

// Scratch reused across steps of the same dimension.
struct StepScratch {
  std::vector<double> grad;
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> sigma2;
};

StepScratch& scratch(std::size_t n) {
  thread_local StepScratch s;
  s.grad.resize(n);
  s.a.resize(n);
  s.b.resize(n);
  s.sigma2.resize(n);
  return s;
}

void adam_surrogate(ArturoState& state, std::span<const double> grad,
                    const ArturoConfig& cfg, std::span<double> a,
                    std::span<double> b) {
  auto& ad = state.adam;
  ++ad.t;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(ad.t));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(ad.t));
  const auto& mu = state.dist.mu;
  for (std::size_t j = 0; j < grad.size(); ++j) {
    ad.m[j] = cfg.adam_beta1 * ad.m[j] + (1.0 - cfg.adam_beta1) * grad[j];
    ad.v[j] = cfg.adam_beta2 * ad.v[j] +
              (1.0 - cfg.adam_beta2) * (grad[j] * grad[j]);
    const double m_hat = ad.m[j] / bc1;
    const double v_hat = ad.v[j] / bc2;
    a[j] = std::sqrt(v_hat) + cfg.adam_eps;
    b[j] = m_hat - a[j] * mu[j];
  }
}

}  // namespace

StepDiagnostics step(ArturoState& state, std::span<const double> grad,
                     const ArturoConfig& cfg,
                     const EtaSolverFn& solver_override) {
  const std::size_t n = state.size();
  if (grad.size() != n) {
    throw std::invalid_argument("arturo step: gradient has length " +
                                std::to_string(grad.size()) + ", expected " +
                                std::to_string(n));
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(grad[j])) {
      throw NonFiniteError("arturo step " + std::to_string(state.step_count) +
                               ": non-finite gradient at " + std::to_string(j),
                           state.step_count);
    }
  }

  StepScratch& s = scratch(n);
  const auto& mu = state.dist.mu;
  if (cfg.weight_decay_mode == WeightDecayMode::coupled &&
      cfg.weight_decay > 0.0) {
    for (std::size_t j = 0; j < n; ++j) {
      s.grad[j] = grad[j] + cfg.weight_decay * mu[j];
    }
  } else {
    std::copy(grad.begin(), grad.end(), s.grad.begin());
  }

  StepDiagnostics diag;
  if (cfg.mode == ArturoMode::adam_moment_surrogate) {
    adam_surrogate(state, s.grad, cfg, s.a, s.b);
  } else {
    filter_update(state.filter, mu, s.grad, cfg.q, cfg.r);
    for (std::size_t j = 0; j < n; ++j) {
      const double aj = state.filter.a[j];
      if (aj < 0.0) {
        s.a[j] = 0.0;
        ++diag.clamp_count;
      } else {
        s.a[j] = aj;
      }
    }
    std::copy(state.filter.b.begin(), state.filter.b.end(), s.b.begin());
  }

  const TrustRegionParams tr{state.epsilon, cfg.rho, cfg.nu, cfg.lambda_prec};
  primal_variance_into(s.a, state.dist, tr, s.sigma2);

  EtaSolution sol;
  if (solver_override) {
    sol = solver_override(s.a, s.b, state.dist, tr, state.dual);
  } else if (cfg.mode == ArturoMode::fixed_eta) {
    sol.eta = cfg.fixed_eta;
    sol.mu = primal_mean(s.a, s.b, state.dist, cfg.fixed_eta, tr);
    sol.c_mu = kl_mean_term(sol.mu, state.dist);
  } else {
    sol = solve_eta(s.a, s.b, state.dist, tr, state.dual, cfg.bisection);
  }
  if (sol.mu.size() != n) {
    throw std::logic_error("arturo step: eta solver returned wrong length");
  }

  if (cfg.weight_decay_mode == WeightDecayMode::decoupled &&
      cfg.weight_decay > 0.0) {
    const double keep = 1.0 - cfg.weight_decay;
    for (double& m : sol.mu) m *= keep;
  }

  state.dist.mu = std::move(sol.mu);
  state.dist.sigma2.swap(s.sigma2);
  state.dual.eta_warm = std::max(sol.eta, cfg.eta_warm_floor);
  ++state.step_count;

  diag.eta = sol.eta;
  diag.c_mu = sol.c_mu;
  diag.bisection_iterations = sol.iterations;
  diag.dual_evaluations = sol.evaluations;
  diag.interior = sol.interior;
  return diag;
}

void on_epoch_end(ArturoState& state, const ArturoConfig& cfg) {
  ++state.epoch;
  const auto& ms = cfg.schedule_milestones;
  if (std::find(ms.begin(), ms.end(), state.epoch) != ms.end()) {
    state.epsilon *= cfg.epsilon_decay_factor;
  }
}

}  // namespace arturo
