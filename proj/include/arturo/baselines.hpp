#pragma once
// SGD with heavy-ball momentum, Adam and AdamW, with step-decay schedules.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace arturo {

enum class BaselineKind { sgd_momentum, adam, adamw };

std::string_view kind_name(BaselineKind kind);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::sgd_momentum;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  std::vector<std::size_t> schedule_milestones;
  double lr_decay_factor = 0.1;
};

void validate(const BaselineConfig& cfg);

struct BaselineState {
  std::vector<double> buf;  // momentum buffer (SGD) or first moment (Adam)
  std::vector<double> v;    // second moment (Adam/AdamW)
  std::size_t t = 0;
  std::size_t epoch = 0;
  double learning_rate = 0.0;  // current scheduled rate
};

BaselineState init_baseline(std::size_t n, const BaselineConfig& cfg);

/// Coupled weight decay: g <- g + wd * theta; buf <- momentum * buf + g;
/// theta <- theta - lr * buf.
void sgd_step(BaselineState& state, std::span<double> params,
              std::span<const double> grad, const BaselineConfig& cfg);

/// Bias-corrected Adam with coupled weight decay folded into the gradient.
void adam_step(BaselineState& state, std::span<double> params,
               std::span<const double> grad, const BaselineConfig& cfg);

/// Adam with decoupled decay theta <- theta * (1 - lr * wd) before the step.
void adamw_step(BaselineState& state, std::span<double> params,
                std::span<const double> grad, const BaselineConfig& cfg);

/// Dispatches on cfg.kind.
void baseline_step(BaselineState& state, std::span<double> params,
                   std::span<const double> grad, const BaselineConfig& cfg);

void on_epoch_end(BaselineState& state, const BaselineConfig& cfg);

}  // namespace arturo
