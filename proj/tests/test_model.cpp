#include "arturo/model.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace arturo;

namespace {

// Loss of the seed-0 4-3-2 MLP on the fixture batch, evaluated with numpy
// from the dumped parameters.
constexpr double kMlp432Loss = 0.7190361077389327;

Batch random_batch(const Arch& arch, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> lab(0, static_cast<int>(output_size(arch)) - 1);
  Batch b;
  b.size = n;
  b.inputs.resize(n * input_size(arch));
  for (auto& v : b.inputs) v = u(rng);
  for (std::size_t i = 0; i < n; ++i) b.labels.push_back(lab(rng));
  return b;
}

std::vector<std::size_t> random_coords(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> d(0, n - 1);
  std::vector<std::size_t> out(k);
  for (auto& c : out) c = d(rng);
  return out;
}

// Plain loops over the documented layout: W1 [3][4], b1, W2 [2][3], b2.
double mlp_4_3_2_reference(const std::vector<double>& p, const Batch& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < b.size; ++i) {
    const double* x = &b.inputs[i * 4];
    double h[3];
    for (int o = 0; o < 3; ++o) {
      double s = p[12 + o];
      for (int k = 0; k < 4; ++k) s += p[o * 4 + k] * x[k];
      h[o] = s > 0.0 ? s : 0.0;
    }
    double z[2];
    for (int o = 0; o < 2; ++o) {
      double s = p[15 + 6 + o];
      for (int k = 0; k < 3; ++k) s += p[15 + o * 3 + k] * h[k];
      z[o] = s;
    }
    const double m = std::max(z[0], z[1]);
    const double lse = m + std::log(std::exp(z[0] - m) + std::exp(z[1] - m));
    total += lse - z[b.labels[i]];
  }
  return total / static_cast<double>(b.size);
}

}  // namespace

TEST_CASE("architecture strings and parameter counts") {
  const auto mlp = parse_arch("mlp:784-256-10");
  CHECK(parameter_count(mlp) == 203530);
  CHECK(to_string(mlp) == "mlp:784-256-10");
  const auto cnn = parse_arch("cnn:1x28x28-16-32-10");
  CHECK(parameter_count(cnn) == 16 * 9 + 16 + 32 * 16 * 9 + 32 + 32 * 7 * 7 * 10 + 10);
  CHECK(input_size(cnn) == 784);
  CHECK(output_size(cnn) == 10);
  CHECK(to_string(cnn) == "cnn:1x28x28-16-32-10");
  CHECK_THROWS(parse_arch("resnet18"));
  CHECK_THROWS(parse_arch("mlp:10"));
  CHECK_THROWS(parse_arch("cnn:1x30x30-4-4-10"));
}

TEST_CASE("init is deterministic per seed and fan-in scaled") {
  const auto arch = parse_arch("mlp:50-20-5");
  const auto a = init_params(arch, 1);
  const auto b = init_params(arch, 1);
  const auto c = init_params(arch, 2);
  CHECK(a.params == b.params);
  CHECK(a.params != c.params);
  const double bound = std::sqrt(6.0 / 50.0);
  for (std::size_t i = 0; i < 50 * 20; ++i) CHECK(std::abs(a.params[i]) <= bound);
}

TEST_CASE("flatten round trip") {
  for (const char* spec : {"mlp:7-5-3-2", "cnn:2x8x8-3-4-5"}) {
    const auto arch = parse_arch(spec);
    const auto m = init_params(arch, 9);
    const auto layers = unflatten(arch, m.params);
    CHECK(flatten(arch, layers) == m.params);
    std::size_t total = 0;
    for (const auto& l : layers) total += l.weight.size() + l.bias.size();
    CHECK(total == parameter_count(arch));
  }
}

TEST_CASE("loss values") {
  const auto arch = parse_arch("mlp:3-10");
  auto m = init_params(arch, 0);
  std::fill(m.params.begin(), m.params.end(), 0.0);
  Batch b;
  b.size = 2;
  b.inputs = {0.1, 0.2, 0.3, 0.9, 0.8, 0.7};
  b.labels = {3, 7};
  CHECK(forward_loss(m, b).loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));

  // Bias-only logits of +-50 make the prediction certain.
  const auto two = parse_arch("mlp:1-2");
  auto p = init_params(two, 0);
  p.params = {0.0, 0.0, 50.0, -50.0};
  Batch one;
  one.size = 1;
  one.inputs = {0.5};
  one.labels = {0};
  CHECK(forward_loss(p, one).loss < 1e-6);
}

TEST_CASE("seeded 4-3-2 regression fixture") {
  const auto arch = parse_arch("mlp:4-3-2");
  const auto m = init_params(arch, 0);
  Batch b;
  b.size = 2;
  b.inputs = {0.2, 0.4, 0.6, 0.8, 0.9, 0.1, 0.5, 0.3};
  b.labels = {1, 0};
  const double loss = forward_loss(m, b).loss;
  CHECK(loss == doctest::Approx(mlp_4_3_2_reference(m.params, b)).epsilon(1e-14));
  CHECK(loss == doctest::Approx(kMlp432Loss).epsilon(1e-12));
}

TEST_CASE("linear model with squared loss") {
  const auto arch = parse_arch("mlp:3-1");
  auto m = init_params(arch, 0);
  m.loss = LossKind::squared_error;
  m.params = {0.5, -1.0, 2.0, 0.25};
  Batch b;
  b.size = 1;
  b.inputs = {1.0, 2.0, 3.0};
  b.targets = {1.5};
  const double yhat = 0.5 - 2.0 + 6.0 + 0.25;
  const auto g = backward(m, b);
  for (int k = 0; k < 3; ++k) {
    CHECK(g[k] == doctest::Approx(2.0 * (yhat - 1.5) * b.inputs[k]).epsilon(1e-14));
  }
  CHECK(g[3] == doctest::Approx(2.0 * (yhat - 1.5)).epsilon(1e-14));
  const std::vector<std::size_t> all{0, 1, 2, 3};
  CHECK(fd_check(m, b, all, 1e-5) < 1e-8);
}

TEST_CASE("gradients match finite differences") {
  for (const char* spec : {"mlp:12-9-7-4", "cnn:1x8x8-3-4-5", "cnn:3x4x4-2-2-3"}) {
    const auto arch = parse_arch(spec);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto m = init_params(arch, seed);
      const auto b = random_batch(arch, 5, 100 + seed);
      const auto coords = random_coords(m.params.size(), 50, 7 + seed);
      CHECK(fd_check(m, b, coords, 1e-5) < 1e-4);
    }
  }
  const auto arch = parse_arch("mlp:3-2");
  const auto m = init_params(arch, 0);
  const auto b = random_batch(arch, 2, 0);
  const std::vector<std::size_t> c{0};
  CHECK_THROWS_AS(fd_check(m, b, c, 0.0), std::invalid_argument);
}

TEST_CASE("zero last layer blocks earlier gradients") {
  const auto arch = parse_arch("mlp:6-5-4");
  auto m = init_params(arch, 3);
  const auto layout = layer_layout(arch);
  const auto& last = layout.back();
  std::fill(m.params.begin() + last.weight_offset,
            m.params.begin() + last.weight_offset + last.weight_size, 0.0);
  const auto g = backward(m, random_batch(arch, 4, 1));
  for (std::size_t i = 0; i < last.weight_offset; ++i) CHECK(g[i] == 0.0);
  CHECK(std::any_of(g.begin() + last.weight_offset, g.end(), [](double v) { return v != 0.0; }));
}

TEST_CASE("a small gradient step lowers the loss") {
  for (const char* spec : {"mlp:10-8-3", "cnn:1x8x8-2-2-3"}) {
    const auto arch = parse_arch(spec);
    auto m = init_params(arch, 5);
    const auto b = random_batch(arch, 8, 2);
    std::vector<double> g(m.params.size());
    const double before = loss_and_gradient(m, b, g);
    for (std::size_t i = 0; i < g.size(); ++i) m.params[i] -= 1e-3 * g[i];
    CHECK(forward_loss(m, b).loss < before);
  }
}

TEST_CASE("shape errors") {
  const auto arch = parse_arch("mlp:4-2");
  const auto m = init_params(arch, 0);
  Batch b;
  b.size = 1;
  b.inputs = {1.0, 2.0, 3.0};
  b.labels = {0};
  CHECK_THROWS_AS(forward_loss(m, b), std::invalid_argument);
  b.inputs.push_back(4.0);
  b.labels = {5};
  CHECK_THROWS(forward_loss(m, b));
}
