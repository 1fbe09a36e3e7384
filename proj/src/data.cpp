#include "arturo/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace arturo {

namespace {

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

// Guards against absurd headers; the largest supported file is well below.
constexpr std::size_t kMaxIdxElements = std::size_t{1} << 32;

}  // namespace

std::vector<double> IdxFile::normalized() const {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(),
                 [](std::uint8_t v) { return v * (1.0 / 255.0); });
  return out;
}

IdxFile load_idx(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  const std::string where = path.string() + ": ";
  if (bytes.size() < 4) throw std::runtime_error(where + "truncated header");
  IdxFile f;
  f.magic = read_be32(bytes.data());
  if (f.magic != kIdxLabelsMagic && f.magic != kIdxImagesMagic) {
    throw std::runtime_error(where + "bad IDX magic " + hex32(f.magic));
  }
  const std::size_t ndims = f.magic & 0xffu;
  const std::size_t header = 4 + 4 * ndims;
  if (bytes.size() < header) throw std::runtime_error(where + "truncated header");
  std::size_t total = 1;
  for (std::size_t d = 0; d < ndims; ++d) {
    const std::size_t dim = read_be32(bytes.data() + 4 + 4 * d);
    if (dim != 0 && total > kMaxIdxElements / dim) {
      throw std::runtime_error(where + "dimension overflow");
    }
    total *= dim;
    f.shape.push_back(dim);
  }
  if (bytes.size() - header < total) {
    throw std::runtime_error(where + "truncated data (" +
                             std::to_string(bytes.size() - header) + " of " +
                             std::to_string(total) + " bytes)");
  }
  f.values.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header),
                  bytes.begin() + static_cast<std::ptrdiff_t>(header + total));
  return f;
}

std::size_t Dataset::sample_size() const noexcept {
  std::size_t s = 1;
  for (std::size_t d : sample_shape) s *= d;
  return s;
}

Dataset load_fashion_mnist(const std::filesystem::path& dir,
                           const std::string& split) {
  const std::string prefix = split == "train" ? "train" : "t10k";
  if (split != "train" && split != "test") {
    throw std::invalid_argument("fashion-mnist split must be train or test");
  }
  auto images = load_idx(dir / (prefix + "-images-idx3-ubyte"));
  auto labels = load_idx(dir / (prefix + "-labels-idx1-ubyte"));
  if (images.magic != kIdxImagesMagic || images.shape.size() != 3) {
    throw std::runtime_error("fashion-mnist: image file is not a 3-d IDX");
  }
  if (labels.magic != kIdxLabelsMagic || labels.shape.size() != 1 ||
      labels.shape[0] != images.shape[0]) {
    throw std::runtime_error("fashion-mnist: label file does not match images");
  }
  Dataset d;
  d.split = split;
  d.count = images.shape[0];
  d.sample_shape = {1, images.shape[1], images.shape[2]};
  d.num_classes = 10;
  d.pixels = std::move(images.values);
  d.labels.assign(labels.values.begin(), labels.values.end());
  for (int y : d.labels) {
    if (y < 0 || y >= 10) throw std::runtime_error("fashion-mnist: bad label");
  }
  return d;
}

namespace {

constexpr std::size_t kCifarPixels = 3 * 32 * 32;

void append_cifar(const std::filesystem::path& path, std::size_t label_bytes,
                  std::size_t classes, Dataset& d) {
  const auto bytes = read_all(path);
  const std::size_t record = label_bytes + kCifarPixels;
  if (bytes.empty() || bytes.size() % record != 0) {
    throw std::runtime_error(path.string() + ": size " +
                             std::to_string(bytes.size()) +
                             " is not a multiple of the record size " +
                             std::to_string(record));
  }
  const std::size_t n = bytes.size() / record;
  d.pixels.reserve(d.pixels.size() + n * kCifarPixels);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* rec = bytes.data() + i * record;
    const int label = rec[label_bytes - 1];
    if (static_cast<std::size_t>(label) >= classes) {
      throw std::runtime_error(path.string() + ": label out of range");
    }
    d.labels.push_back(label);
    d.pixels.insert(d.pixels.end(), rec + label_bytes, rec + record);
  }
  d.count += n;
}

}  // namespace

std::pair<Dataset, Dataset> load_cifar_binary(const std::filesystem::path& dir,
                                              int which) {
  if (which != 10 && which != 100) {
    throw std::invalid_argument("cifar variant must be 10 or 100");
  }
  Dataset train, test;
  for (Dataset* d : {&train, &test}) {
    d->sample_shape = {3, 32, 32};
    d->num_classes = static_cast<std::size_t>(which);
  }
  train.split = "train";
  test.split = "test";
  if (which == 10) {
    for (int b = 1; b <= 5; ++b) {
      append_cifar(dir / ("data_batch_" + std::to_string(b) + ".bin"), 1, 10,
                   train);
    }
    append_cifar(dir / "test_batch.bin", 1, 10, test);
  } else {
    append_cifar(dir / "train.bin", 2, 100, train);
    append_cifar(dir / "test.bin", 2, 100, test);
  }
  return {std::move(train), std::move(test)};
}

std::vector<std::vector<std::size_t>> minibatches(std::size_t count,
                                                  std::size_t batch_size,
                                                  std::uint64_t seed,
                                                  std::uint64_t epoch) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch),
                    static_cast<std::uint32_t>(epoch >> 32), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < count; i += batch_size) {
    const std::size_t end = std::min(count, i + batch_size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

Batch make_batch(const Dataset& data, std::span<const std::size_t> indices) {
  const std::size_t d = data.sample_size();
  Batch b;
  b.size = indices.size();
  b.inputs.resize(b.size * d);
  b.labels.resize(b.size);
  for (std::size_t i = 0; i < b.size; ++i) {
    const std::size_t s = indices[i];
    if (s >= data.count) throw std::out_of_range("make_batch: bad index");
    const std::uint8_t* src = data.pixels.data() + s * d;
    double* dst = b.inputs.data() + i * d;
    for (std::size_t k = 0; k < d; ++k) dst[k] = src[k] * (1.0 / 255.0);
    b.labels[i] = data.labels[s];
  }
  return b;
}

SyntheticQuadraticTask make_quadratic_task(std::size_t n, double d_min,
                                           double d_max, double noise,
                                           std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("quadratic task: n must be >= 1");
  if (!(d_min > 0.0) || !(d_max >= d_min)) {
    throw std::invalid_argument("quadratic task: need 0 < d_min <= d_max");
  }
  if (!(noise >= 0.0)) throw std::invalid_argument("quadratic task: noise < 0");
  SyntheticQuadraticTask t;
  t.noise = noise;
  t.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> opt(-1.0, 1.0);
  std::uniform_real_distribution<double> curv(d_min, d_max);
  for (std::size_t j = 0; j < n; ++j) {
    t.theta_star.push_back(opt(rng));
    t.diag.push_back(curv(rng));
  }
  return t;
}

std::vector<double> synthetic_grad(const SyntheticQuadraticTask& task,
                                   std::span<const double> mu,
                                   std::uint64_t batch_seed,
                                   std::size_t samples) {
  const std::size_t n = task.theta_star.size();
  if (mu.size() != n) throw std::invalid_argument("synthetic_grad: bad length");
  if (samples == 0) throw std::invalid_argument("synthetic_grad: samples == 0");
  std::vector<double> g(n);
  if (task.noise == 0.0) {
    for (std::size_t j = 0; j < n; ++j) {
      g[j] = task.diag[j] * (mu[j] - task.theta_star[j]);
    }
    return g;
  }
  std::mt19937_64 rng(batch_seed);
  std::normal_distribution<double> noise(0.0, task.noise);
  std::vector<double> c(n, 0.0);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t j = 0; j < n; ++j) c[j] += task.theta_star[j] + noise(rng);
  }
  const double inv = 1.0 / static_cast<double>(samples);
  for (std::size_t j = 0; j < n; ++j) {
    g[j] = task.diag[j] * (mu[j] - c[j] * inv);
  }
  return g;
}

double quadratic_loss(const SyntheticQuadraticTask& task,
                      std::span<const double> mu) {
  if (mu.size() != task.theta_star.size()) {
    throw std::invalid_argument("quadratic_loss: bad length");
  }
  double f = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const double d = mu[j] - task.theta_star[j];
    f += task.diag[j] * d * d;
  }
  return 0.5 * f;
}

}  // namespace arturo
