#include "arturo/baselines.hpp"

#include "arturo/errors.hpp"
#include "arturo/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace arturo {

std::string_view kind_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::sgd_momentum:
      return "sgd";
    case BaselineKind::adam:
      return "adam";
    case BaselineKind::adamw:
      return "adamw";
  }
  return "unknown";
}

void validate(const BaselineConfig& cfg) {
  auto unit = [](double x) { return x >= 0.0 && x < 1.0; };
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw std::invalid_argument("baseline: learning rate must be > 0");
  }
  if (!unit(cfg.momentum)) throw std::invalid_argument("baseline: momentum");
  if (!unit(cfg.beta1) || !unit(cfg.beta2)) {
    throw std::invalid_argument("baseline: betas must lie in [0, 1)");
  }
  if (!(cfg.adam_eps > 0.0)) throw std::invalid_argument("baseline: adam_eps");
  if (!(cfg.weight_decay >= 0.0) || !std::isfinite(cfg.weight_decay)) {
    throw std::invalid_argument("baseline: weight decay must be >= 0");
  }
  if (!(cfg.lr_decay_factor > 0.0)) {
    throw std::invalid_argument("baseline: lr decay factor must be > 0");
  }
  const auto& ms = cfg.schedule_milestones;
  for (std::size_t i = 1; i < ms.size(); ++i) {
    if (ms[i] <= ms[i - 1]) {
      throw std::invalid_argument("baseline: milestones must increase");
    }
  }
}

BaselineState init_baseline(std::size_t n, const BaselineConfig& cfg) {
  validate(cfg);
  BaselineState s;
  s.buf.assign(n, 0.0);
  if (cfg.kind != BaselineKind::sgd_momentum) s.v.assign(n, 0.0);
  s.learning_rate = cfg.learning_rate;
  return s;
}

namespace {

void check(const BaselineState& state, std::span<double> params,
           std::span<const double> grad) {
  if (params.size() != grad.size() || state.buf.size() != params.size()) {
    throw std::invalid_argument("baseline step: length mismatch");
  }
  for (std::size_t j = 0; j < grad.size(); ++j) {
    if (!std::isfinite(grad[j]) || !std::isfinite(params[j])) {
      throw NonFiniteError("baseline step " + std::to_string(state.t) +
                               ": non-finite value at " + std::to_string(j),
                           state.t);
    }
  }
}

void adam_like(BaselineState& state, std::span<double> params,
               std::span<const double> grad, const BaselineConfig& cfg,
               bool decoupled) {
  check(state, params, grad);
  if (state.v.size() != params.size()) {
    throw std::invalid_argument("adam step: state has no second moment");
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  const double lr = state.learning_rate;
  const double coupled = decoupled ? 0.0 : cfg.weight_decay;
  const double decay_mul = decoupled ? 1.0 - lr * cfg.weight_decay : 1.0;
  kernels::active().adam_update(params.size(), params.data(), grad.data(),
                                state.buf.data(), state.v.data(), cfg.beta1,
                                cfg.beta2, lr, bc1, bc2, cfg.adam_eps, coupled,
                                decay_mul);
}

}  // namespace

void sgd_step(BaselineState& state, std::span<double> params,
              std::span<const double> grad, const BaselineConfig& cfg) {
  check(state, params, grad);
  ++state.t;
  kernels::active().sgd_momentum_update(
      params.size(), params.data(), grad.data(), state.buf.data(),
      state.learning_rate, cfg.momentum, cfg.weight_decay);
}

void adam_step(BaselineState& state, std::span<double> params,
               std::span<const double> grad, const BaselineConfig& cfg) {
  adam_like(state, params, grad, cfg, false);
}

void adamw_step(BaselineState& state, std::span<double> params,
                std::span<const double> grad, const BaselineConfig& cfg) {
  adam_like(state, params, grad, cfg, true);
}

void baseline_step(BaselineState& state, std::span<double> params,
                   std::span<const double> grad, const BaselineConfig& cfg) {
  switch (cfg.kind) {
    case BaselineKind::sgd_momentum:
      return sgd_step(state, params, grad, cfg);
    case BaselineKind::adam:
      return adam_step(state, params, grad, cfg);
    case BaselineKind::adamw:
      return adamw_step(state, params, grad, cfg);
  }
}

void on_epoch_end(BaselineState& state, const BaselineConfig& cfg) {
  ++state.epoch;
  const auto& ms = cfg.schedule_milestones;
  if (std::find(ms.begin(), ms.end(), state.epoch) != ms.end()) {
    state.learning_rate *= cfg.lr_decay_factor;
  }
}

}  // namespace arturo
