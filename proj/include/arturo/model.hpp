#pragma once
// Small hand-differentiated networks on a flat parameter vector.
//
// Parameter layout (the flatten contract): layers in forward order, each as
// its weight tensor (row-major) followed by its bias vector.
//   dense:  weight [out][in]
//   conv3x3 (stride 1, zero padding 1): weight [out_c][in_c][3][3]
// The CNN is conv(16) -> ReLU -> maxpool2 -> conv(32) -> ReLU -> maxpool2 ->
// dense(classes). Hidden dense layers of the MLP use ReLU; ReLU'(0) = 0.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace arturo {

struct MlpArch {
  std::vector<std::size_t> layers;  // {inputs, hidden..., outputs}
};

struct CnnArch {
  std::size_t channels = 1;
  std::size_t height = 28;
  std::size_t width = 28;
  std::size_t conv1 = 16;
  std::size_t conv2 = 32;
  std::size_t classes = 10;
};

using Arch = std::variant<MlpArch, CnnArch>;

/// "mlp:784-256-10" or "cnn:1x28x28-16-32-10".
Arch parse_arch(std::string_view text);
std::string to_string(const Arch& arch);

std::size_t input_size(const Arch& arch);
std::size_t output_size(const Arch& arch);

struct LayerSpec {
  std::string name;
  std::vector<std::size_t> weight_shape;
  std::size_t fan_in = 0;
  std::size_t weight_offset = 0;
  std::size_t weight_size = 0;
  std::size_t bias_offset = 0;
  std::size_t bias_size = 0;
};

std::vector<LayerSpec> layer_layout(const Arch& arch);
std::size_t parameter_count(const Arch& arch);

struct LayerTensors {
  std::string name;
  std::vector<std::size_t> weight_shape;
  std::vector<double> weight;
  std::vector<double> bias;
};

std::vector<LayerTensors> unflatten(const Arch& arch,
                                    std::span<const double> params);
std::vector<double> flatten(const Arch& arch,
                            const std::vector<LayerTensors>& layers);

enum class LossKind { softmax_cross_entropy, squared_error };

struct ModelState {
  std::vector<double> params;
  Arch arch;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::softmax_cross_entropy;
};

/// Kaiming-uniform weights U(+-sqrt(6 / fan_in)), biases U(+-1/sqrt(fan_in)).
ModelState init_params(const Arch& arch, std::uint64_t seed);

struct Batch {
  std::size_t size = 0;
  std::vector<double> inputs;   // size x input_size(arch), row-major
  std::vector<int> labels;      // cross-entropy targets
  std::vector<double> targets;  // squared-error targets, size x outputs
};

struct ForwardResult {
  double loss = 0.0;
  std::vector<double> logits;  // size x outputs
};

/// Mean loss over the batch. Throws std::invalid_argument on shape mismatch
/// or labels outside [0, classes).
ForwardResult forward_loss(const ModelState& model, const Batch& batch);

/// Gradient of forward_loss(...).loss with respect to model.params.
std::vector<double> backward(const ModelState& model, const Batch& batch);

/// Loss and gradient in one pass; grad must have parameter_count entries.
double loss_and_gradient(const ModelState& model, const Batch& batch,
                         std::span<double> grad);

/// Central differences with step h on the listed coordinates; returns the
/// max of |g_fd - g_bp| / max(|g_fd|, |g_bp|, 1e-8).
double fd_check(const ModelState& model, const Batch& batch,
                std::span<const std::size_t> coords, double h);

/// Index of the largest logit per row.
std::vector<int> predict(const ForwardResult& result, std::size_t classes);

}  // namespace arturo
