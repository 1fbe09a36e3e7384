#pragma once
// Dataset ingestion (IDX, CIFAR binary), seeded mini-batching and a
// synthetic noisy quadratic objective.

#include "arturo/model.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace arturo {

inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;

struct IdxFile {
  std::uint32_t magic = 0;
  std::vector<std::size_t> shape;
  std::vector<std::uint8_t> values;

  /// values / 255
  std::vector<double> normalized() const;
};

/// Throws std::runtime_error on unreadable files, unknown magic (the message
/// names the value read), truncation or dimension overflow.
IdxFile load_idx(const std::filesystem::path& path);

/// Images are stored as raw bytes; inputs are bytes / 255 in [0, 1].
struct Dataset {
  std::string split;  // "train" or "test"
  std::size_t count = 0;
  std::vector<std::size_t> sample_shape;  // e.g. {1, 28, 28} or {3, 32, 32}
  std::size_t num_classes = 0;
  std::vector<std::uint8_t> pixels;
  std::vector<int> labels;

  std::size_t sample_size() const noexcept;
  double input(std::size_t sample, std::size_t i) const noexcept {
    return pixels[sample * sample_size() + i] * (1.0 / 255.0);
  }
};

/// Reads {train,t10k}-{images-idx3,labels-idx1}-ubyte from dir.
Dataset load_fashion_mnist(const std::filesystem::path& dir,
                           const std::string& split);

/// CIFAR-10: data_batch_{1..5}.bin + test_batch.bin, records of 1 label byte
/// and 3072 pixels. CIFAR-100: train.bin + test.bin, records of a coarse and
/// a fine label byte then 3072 pixels; the fine label is kept.
std::pair<Dataset, Dataset> load_cifar_binary(const std::filesystem::path& dir,
                                              int which);

/// Seeded permutation of [0, count) per (seed, epoch), cut into batches of
/// batch_size; the final partial batch is kept.
std::vector<std::vector<std::size_t>> minibatches(std::size_t count,
                                                  std::size_t batch_size,
                                                  std::uint64_t seed,
                                                  std::uint64_t epoch);

Batch make_batch(const Dataset& data, std::span<const std::size_t> indices);

/// f(mu) = 0.5 * sum_j D_j (mu_j - theta*_j)^2, observed through noisy
/// optima c ~ N(theta*, noise^2 I).
struct SyntheticQuadraticTask {
  std::vector<double> theta_star;
  std::vector<double> diag;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

/// theta* ~ U[-1, 1]^n, D ~ U[d_min, d_max]^n from the given seed.
SyntheticQuadraticTask make_quadratic_task(std::size_t n, double d_min,
                                           double d_max, double noise,
                                           std::uint64_t seed);

/// Mean over `samples` draws of D * (mu - c), c ~ N(theta*, noise^2 I), drawn
/// from a generator seeded with batch_seed.
std::vector<double> synthetic_grad(const SyntheticQuadraticTask& task,
                                   std::span<const double> mu,
                                   std::uint64_t batch_seed,
                                   std::size_t samples = 1);

double quadratic_loss(const SyntheticQuadraticTask& task,
                      std::span<const double> mu);

}  // namespace arturo
