#include "arturo/model.hpp"

#include "arturo/kernels.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace arturo {

namespace {

std::size_t parse_size(std::string_view s, std::string_view whole) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || v == 0) {
    throw std::invalid_argument("bad architecture '" + std::string(whole) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

Arch parse_arch(std::string_view text) {
  if (text.starts_with("mlp:")) {
    MlpArch arch;
    for (auto part : split(text.substr(4), '-')) {
      arch.layers.push_back(parse_size(part, text));
    }
    if (arch.layers.size() < 2) {
      throw std::invalid_argument("mlp needs at least input and output sizes");
    }
    return arch;
  }
  if (text.starts_with("cnn:")) {
    const auto parts = split(text.substr(4), '-');
    if (parts.size() != 4) {
      throw std::invalid_argument("expected cnn:CxHxW-conv1-conv2-classes");
    }
    const auto dims = split(parts[0], 'x');
    if (dims.size() != 3) {
      throw std::invalid_argument("expected input shape CxHxW in '" +
                                  std::string(text) + "'");
    }
    CnnArch arch{parse_size(dims[0], text), parse_size(dims[1], text),
                 parse_size(dims[2], text), parse_size(parts[1], text),
                 parse_size(parts[2], text), parse_size(parts[3], text)};
    if (arch.height % 4 != 0 || arch.width % 4 != 0) {
      throw std::invalid_argument("cnn input height/width must be divisible by 4");
    }
    return arch;
  }
  throw std::invalid_argument("unknown architecture '" + std::string(text) + "'");
}

std::string to_string(const Arch& arch) {
  std::ostringstream os;
  if (const auto* m = std::get_if<MlpArch>(&arch)) {
    os << "mlp:";
    for (std::size_t i = 0; i < m->layers.size(); ++i) {
      os << (i ? "-" : "") << m->layers[i];
    }
  } else {
    const auto& c = std::get<CnnArch>(arch);
    os << "cnn:" << c.channels << 'x' << c.height << 'x' << c.width << '-'
       << c.conv1 << '-' << c.conv2 << '-' << c.classes;
  }
  return os.str();
}

std::size_t input_size(const Arch& arch) {
  if (const auto* m = std::get_if<MlpArch>(&arch)) return m->layers.front();
  const auto& c = std::get<CnnArch>(arch);
  return c.channels * c.height * c.width;
}

std::size_t output_size(const Arch& arch) {
  if (const auto* m = std::get_if<MlpArch>(&arch)) return m->layers.back();
  return std::get<CnnArch>(arch).classes;
}

std::vector<LayerSpec> layer_layout(const Arch& arch) {
  std::vector<LayerSpec> out;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<std::size_t> shape,
                 std::size_t fan_in) {
    LayerSpec s;
    s.name = std::move(name);
    s.weight_shape = std::move(shape);
    s.fan_in = fan_in;
    s.weight_size = 1;
    for (std::size_t d : s.weight_shape) s.weight_size *= d;
    s.weight_offset = offset;
    offset += s.weight_size;
    s.bias_offset = offset;
    s.bias_size = s.weight_shape.front();
    offset += s.bias_size;
    out.push_back(std::move(s));
  };
  if (const auto* m = std::get_if<MlpArch>(&arch)) {
    for (std::size_t l = 0; l + 1 < m->layers.size(); ++l) {
      add("dense" + std::to_string(l), {m->layers[l + 1], m->layers[l]},
          m->layers[l]);
    }
  } else {
    const auto& c = std::get<CnnArch>(arch);
    add("conv1", {c.conv1, c.channels, 3, 3}, c.channels * 9);
    add("conv2", {c.conv2, c.conv1, 3, 3}, c.conv1 * 9);
    const std::size_t features = c.conv2 * (c.height / 4) * (c.width / 4);
    add("dense", {c.classes, features}, features);
  }
  return out;
}

std::size_t parameter_count(const Arch& arch) {
  const auto layout = layer_layout(arch);
  return layout.back().bias_offset + layout.back().bias_size;
}

std::vector<LayerTensors> unflatten(const Arch& arch,
                                    std::span<const double> params) {
  if (params.size() != parameter_count(arch)) {
    throw std::invalid_argument("unflatten: parameter count mismatch");
  }
  std::vector<LayerTensors> out;
  for (const auto& spec : layer_layout(arch)) {
    LayerTensors t;
    t.name = spec.name;
    t.weight_shape = spec.weight_shape;
    const auto w = params.subspan(spec.weight_offset, spec.weight_size);
    const auto b = params.subspan(spec.bias_offset, spec.bias_size);
    t.weight.assign(w.begin(), w.end());
    t.bias.assign(b.begin(), b.end());
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<double> flatten(const Arch& arch,
                            const std::vector<LayerTensors>& layers) {
  const auto layout = layer_layout(arch);
  if (layers.size() != layout.size()) {
    throw std::invalid_argument("flatten: layer count mismatch");
  }
  std::vector<double> out(parameter_count(arch));
  for (std::size_t l = 0; l < layout.size(); ++l) {
    if (layers[l].weight.size() != layout[l].weight_size ||
        layers[l].bias.size() != layout[l].bias_size) {
      throw std::invalid_argument("flatten: tensor size mismatch in " +
                                  layout[l].name);
    }
    std::copy(layers[l].weight.begin(), layers[l].weight.end(),
              out.begin() + static_cast<std::ptrdiff_t>(layout[l].weight_offset));
    std::copy(layers[l].bias.begin(), layers[l].bias.end(),
              out.begin() + static_cast<std::ptrdiff_t>(layout[l].bias_offset));
  }
  return out;
}

ModelState init_params(const Arch& arch, std::uint64_t seed) {
  ModelState m;
  m.arch = arch;
  m.seed = seed;
  m.params.resize(parameter_count(arch));
  std::mt19937_64 rng(seed);
  for (const auto& spec : layer_layout(arch)) {
    const double fan = static_cast<double>(spec.fan_in);
    std::uniform_real_distribution<double> w(-std::sqrt(6.0 / fan),
                                             std::sqrt(6.0 / fan));
    std::uniform_real_distribution<double> b(-1.0 / std::sqrt(fan),
                                             1.0 / std::sqrt(fan));
    for (std::size_t i = 0; i < spec.weight_size; ++i) {
      m.params[spec.weight_offset + i] = w(rng);
    }
    for (std::size_t i = 0; i < spec.bias_size; ++i) {
      m.params[spec.bias_offset + i] = b(rng);
    }
  }
  return m;
}

namespace {

void transpose(const double* src, std::size_t rows, std::size_t cols,
               double* dst) {
  constexpr std::size_t kBlock = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += kBlock) {
    const std::size_t r1 = std::min(rows, r0 + kBlock);
    for (std::size_t c0 = 0; c0 < cols; c0 += kBlock) {
      const std::size_t c1 = std::min(cols, c0 + kBlock);
      for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t c = c0; c < c1; ++c) dst[c * rows + r] = src[r * cols + c];
      }
    }
  }
}

// Z (B x out) = X (B x in) * W^T + bias, W stored [out][in].
void dense_forward(const double* X, std::size_t batch, std::size_t in,
                   const double* W, const double* bias, std::size_t out,
                   double* Z, std::vector<double>& scratch) {
  scratch.resize(in * out);
  transpose(W, out, in, scratch.data());
  kernels::active().gemm_nn(batch, out, in, X, in, scratch.data(), out, Z, out,
                            false);
  for (std::size_t i = 0; i < batch; ++i) {
    double* z = Z + i * out;
    for (std::size_t o = 0; o < out; ++o) z[o] += bias[o];
  }
}

// Accumulates dW (out x in) and db, optionally writes dX (B x in).
void dense_backward(const double* X, std::size_t batch, std::size_t in,
                    const double* W, std::size_t out, const double* dZ,
                    double* dW, double* db, double* dX,
                    std::vector<double>& scratch) {
  scratch.resize(out * batch);
  transpose(dZ, batch, out, scratch.data());
  kernels::active().gemm_nn(out, in, batch, scratch.data(), batch, X, in, dW,
                            in, true);
  for (std::size_t o = 0; o < out; ++o) {
    const double* row = scratch.data() + o * batch;
    double s = 0.0;
    for (std::size_t i = 0; i < batch; ++i) s += row[i];
    db[o] += s;
  }
  if (dX != nullptr) {
    kernels::active().gemm_nn(batch, in, out, dZ, out, W, in, dX, in, false);
  }
}

void relu_inplace(std::span<double> v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
}

// dA *= [Z > 0]
void relu_backward(std::span<const double> z, std::span<double> grad) {
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!(z[i] > 0.0)) grad[i] = 0.0;
  }
}

void im2col(const double* x, std::size_t channels, std::size_t h,
            std::size_t w, double* cols) {
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        double* row = cols + ((c * 3 + ky) * 3 + kx) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          for (std::size_t xx = 0; xx < w; ++xx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(xx + kx) - 1;
            const bool inside = iy >= 0 && iy < static_cast<std::ptrdiff_t>(h) &&
                                ix >= 0 && ix < static_cast<std::ptrdiff_t>(w);
            row[y * w + xx] =
                inside ? x[(c * h + static_cast<std::size_t>(iy)) * w +
                           static_cast<std::size_t>(ix)]
                       : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, std::size_t channels, std::size_t h,
                std::size_t w, double* dx) {
  const std::size_t hw = h * w;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const double* row = cols + ((c * 3 + ky) * 3 + kx) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t xx = 0; xx < w; ++xx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(xx + kx) - 1;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            dx[(c * h + static_cast<std::size_t>(iy)) * w +
               static_cast<std::size_t>(ix)] += row[y * w + xx];
          }
        }
      }
    }
  }
}

// 2x2 max pooling with stride 2 over (channels x h x w); first max wins ties.
void maxpool_forward(const double* x, std::size_t channels, std::size_t h,
                     std::size_t w, double* out, std::uint32_t* argmax) {
  const std::size_t oh = h / 2;
  const std::size_t ow = w / 2;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xx = 0; xx < ow; ++xx) {
        std::size_t best = (c * h + 2 * y) * w + 2 * xx;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (c * h + 2 * y + dy) * w + 2 * xx + dx;
            if (x[idx] > x[best]) best = idx;
          }
        }
        const std::size_t o = (c * oh + y) * ow + xx;
        out[o] = x[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

struct Checked {
  std::size_t batch;
  std::size_t in;
  std::size_t out;
};

Checked check_batch(const ModelState& model, const Batch& batch) {
  const std::size_t in = input_size(model.arch);
  const std::size_t out = output_size(model.arch);
  if (model.params.size() != parameter_count(model.arch)) {
    throw std::invalid_argument("model: parameter vector has wrong length");
  }
  if (batch.size == 0) throw std::invalid_argument("batch is empty");
  if (batch.inputs.size() != batch.size * in) {
    throw std::invalid_argument("batch inputs do not match the architecture (" +
                                std::to_string(batch.inputs.size()) + " != " +
                                std::to_string(batch.size) + " x " +
                                std::to_string(in) + ")");
  }
  if (model.loss == LossKind::softmax_cross_entropy) {
    if (batch.labels.size() != batch.size) {
      throw std::invalid_argument("batch labels do not match batch size");
    }
    for (int y : batch.labels) {
      if (y < 0 || static_cast<std::size_t>(y) >= out) {
        throw std::invalid_argument("label " + std::to_string(y) +
                                    " outside [0, " + std::to_string(out) + ")");
      }
    }
  } else if (batch.targets.size() != batch.size * out) {
    throw std::invalid_argument("batch targets do not match outputs");
  }
  return {batch.size, in, out};
}

// Mean loss and, when dlogits is non-null, its gradient w.r.t. the logits.
double loss_head(const ModelState& model, const Batch& batch,
                 const std::vector<double>& logits, std::size_t out,
                 std::vector<double>* dlogits) {
  const std::size_t n = batch.size;
  const double inv_n = 1.0 / static_cast<double>(n);
  if (dlogits) dlogits->assign(n * out, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = logits.data() + i * out;
    if (model.loss == LossKind::squared_error) {
      const double* y = batch.targets.data() + i * out;
      for (std::size_t o = 0; o < out; ++o) {
        const double d = z[o] - y[o];
        total += d * d;
        if (dlogits) (*dlogits)[i * out + o] = 2.0 * d * inv_n;
      }
      continue;
    }
    const double zmax = *std::max_element(z, z + out);
    double sum = 0.0;
    for (std::size_t o = 0; o < out; ++o) sum += std::exp(z[o] - zmax);
    const double lse = zmax + std::log(sum);
    const auto label = static_cast<std::size_t>(batch.labels[i]);
    total += lse - z[label];
    if (dlogits) {
      double* d = dlogits->data() + i * out;
      for (std::size_t o = 0; o < out; ++o) d[o] = std::exp(z[o] - lse) * inv_n;
      d[label] -= inv_n;
    }
  }
  return total * inv_n;
}

double mlp_pass(const ModelState& model, const MlpArch& arch,
                const Batch& batch, std::vector<double>& logits, double* grad) {
  const auto layout = layer_layout(model.arch);
  const std::size_t n = batch.size;
  const std::size_t depth = layout.size();
  const double* p = model.params.data();
  std::vector<double> scratch;
  // acts[0] is the input; pre[l] holds layer l's pre-activation.
  std::vector<std::vector<double>> pre(depth);
  std::vector<std::vector<double>> acts(depth);
  const double* x = batch.inputs.data();
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t in = arch.layers[l];
    const std::size_t out = arch.layers[l + 1];
    pre[l].resize(n * out);
    dense_forward(l == 0 ? x : acts[l].data(), n, in,
                  p + layout[l].weight_offset, p + layout[l].bias_offset, out,
                  pre[l].data(), scratch);
    if (l + 1 < depth) {
      acts[l + 1] = pre[l];
      relu_inplace(acts[l + 1]);
    }
  }
  logits = pre[depth - 1];
  if (grad == nullptr) return loss_head(model, batch, logits, arch.layers.back(), nullptr);

  std::vector<double> dz;
  const double loss = loss_head(model, batch, logits, arch.layers.back(), &dz);
  std::vector<double> dprev;
  for (std::size_t l = depth; l-- > 0;) {
    const std::size_t in = arch.layers[l];
    const std::size_t out = arch.layers[l + 1];
    const double* input = l == 0 ? x : acts[l].data();
    if (l > 0) dprev.resize(n * in);
    dense_backward(input, n, in, p + layout[l].weight_offset, out, dz.data(),
                   grad + layout[l].weight_offset, grad + layout[l].bias_offset,
                   l > 0 ? dprev.data() : nullptr, scratch);
    if (l > 0) {
      relu_backward(pre[l - 1], dprev);
      dz.swap(dprev);
    }
  }
  return loss;
}

double cnn_pass(const ModelState& model, const CnnArch& a, const Batch& batch,
                std::vector<double>& logits, double* grad) {
  const auto layout = layer_layout(model.arch);
  const auto& k = kernels::active();
  const double* p = model.params.data();
  const std::size_t n = batch.size;
  const std::size_t h1 = a.height, w1 = a.width, hw1 = h1 * w1;
  const std::size_t h2 = h1 / 2, w2 = w1 / 2, hw2 = h2 * w2;
  const std::size_t h3 = h2 / 2, w3 = w2 / 2, hw3 = h3 * w3;
  const std::size_t k1 = a.channels * 9, k2 = a.conv1 * 9;
  const std::size_t in_sz = a.channels * hw1;
  const std::size_t feat = a.conv2 * hw3;

  const double* W1 = p + layout[0].weight_offset;
  const double* b1 = p + layout[0].bias_offset;
  const double* W2 = p + layout[1].weight_offset;
  const double* b2 = p + layout[1].bias_offset;
  const double* Wd = p + layout[2].weight_offset;
  const double* bd = p + layout[2].bias_offset;

  std::vector<double> cols1(n * k1 * hw1), z1(n * a.conv1 * hw1);
  std::vector<double> p1(n * a.conv1 * hw2);
  std::vector<std::uint32_t> arg1(p1.size());
  std::vector<double> cols2(n * k2 * hw2), z2(n * a.conv2 * hw2);
  std::vector<double> features(n * feat);
  std::vector<std::uint32_t> arg2(features.size());
  std::vector<double> act;

  for (std::size_t s = 0; s < n; ++s) {
    double* c1 = cols1.data() + s * k1 * hw1;
    double* zz1 = z1.data() + s * a.conv1 * hw1;
    im2col(batch.inputs.data() + s * in_sz, a.channels, h1, w1, c1);
    k.gemm_nn(a.conv1, hw1, k1, W1, k1, c1, hw1, zz1, hw1, false);
    for (std::size_t c = 0; c < a.conv1; ++c) {
      for (std::size_t i = 0; i < hw1; ++i) zz1[c * hw1 + i] += b1[c];
    }
    act.assign(zz1, zz1 + a.conv1 * hw1);
    relu_inplace(act);
    maxpool_forward(act.data(), a.conv1, h1, w1, p1.data() + s * a.conv1 * hw2,
                    arg1.data() + s * a.conv1 * hw2);

    double* c2 = cols2.data() + s * k2 * hw2;
    double* zz2 = z2.data() + s * a.conv2 * hw2;
    im2col(p1.data() + s * a.conv1 * hw2, a.conv1, h2, w2, c2);
    k.gemm_nn(a.conv2, hw2, k2, W2, k2, c2, hw2, zz2, hw2, false);
    for (std::size_t c = 0; c < a.conv2; ++c) {
      for (std::size_t i = 0; i < hw2; ++i) zz2[c * hw2 + i] += b2[c];
    }
    act.assign(zz2, zz2 + a.conv2 * hw2);
    relu_inplace(act);
    maxpool_forward(act.data(), a.conv2, h2, w2, features.data() + s * feat,
                    arg2.data() + s * feat);
  }

  std::vector<double> scratch;
  logits.resize(n * a.classes);
  dense_forward(features.data(), n, feat, Wd, bd, a.classes, logits.data(),
                scratch);
  if (grad == nullptr) return loss_head(model, batch, logits, a.classes, nullptr);

  std::vector<double> dlogits;
  const double loss = loss_head(model, batch, logits, a.classes, &dlogits);
  std::vector<double> dfeat(n * feat);
  dense_backward(features.data(), n, feat, Wd, a.classes, dlogits.data(),
                 grad + layout[2].weight_offset, grad + layout[2].bias_offset,
                 dfeat.data(), scratch);

  double* dW1 = grad + layout[0].weight_offset;
  double* db1 = grad + layout[0].bias_offset;
  double* dW2 = grad + layout[1].weight_offset;
  double* db2 = grad + layout[1].bias_offset;

  std::vector<double> W2t(k2 * a.conv2);
  transpose(W2, a.conv2, k2, W2t.data());
  std::vector<double> dz2(a.conv2 * hw2), dz1(a.conv1 * hw1);
  std::vector<double> colsT, dcols2(k2 * hw2), dp1(a.conv1 * hw2);

  for (std::size_t s = 0; s < n; ++s) {
    // Unpool into the conv2 pre-activation gradient.
    std::fill(dz2.begin(), dz2.end(), 0.0);
    const double* df = dfeat.data() + s * feat;
    const std::uint32_t* g2 = arg2.data() + s * feat;
    for (std::size_t i = 0; i < feat; ++i) dz2[g2[i]] += df[i];
    relu_backward({z2.data() + s * a.conv2 * hw2, a.conv2 * hw2}, dz2);

    const double* c2 = cols2.data() + s * k2 * hw2;
    colsT.resize(hw2 * k2);
    transpose(c2, k2, hw2, colsT.data());
    k.gemm_nn(a.conv2, k2, hw2, dz2.data(), hw2, colsT.data(), k2, dW2, k2, true);
    for (std::size_t c = 0; c < a.conv2; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < hw2; ++i) acc += dz2[c * hw2 + i];
      db2[c] += acc;
    }
    k.gemm_nn(k2, hw2, a.conv2, W2t.data(), a.conv2, dz2.data(), hw2,
              dcols2.data(), hw2, false);
    std::fill(dp1.begin(), dp1.end(), 0.0);
    col2im_add(dcols2.data(), a.conv1, h2, w2, dp1.data());

    std::fill(dz1.begin(), dz1.end(), 0.0);
    const std::uint32_t* g1 = arg1.data() + s * a.conv1 * hw2;
    for (std::size_t i = 0; i < a.conv1 * hw2; ++i) dz1[g1[i]] += dp1[i];
    relu_backward({z1.data() + s * a.conv1 * hw1, a.conv1 * hw1}, dz1);

    const double* c1 = cols1.data() + s * k1 * hw1;
    colsT.resize(hw1 * k1);
    transpose(c1, k1, hw1, colsT.data());
    k.gemm_nn(a.conv1, k1, hw1, dz1.data(), hw1, colsT.data(), k1, dW1, k1, true);
    for (std::size_t c = 0; c < a.conv1; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < hw1; ++i) acc += dz1[c * hw1 + i];
      db1[c] += acc;
    }
  }
  return loss;
}

double run(const ModelState& model, const Batch& batch,
           std::vector<double>& logits, double* grad) {
  check_batch(model, batch);
  if (const auto* m = std::get_if<MlpArch>(&model.arch)) {
    return mlp_pass(model, *m, batch, logits, grad);
  }
  return cnn_pass(model, std::get<CnnArch>(model.arch), batch, logits, grad);
}

}  // namespace

ForwardResult forward_loss(const ModelState& model, const Batch& batch) {
  ForwardResult r;
  r.loss = run(model, batch, r.logits, nullptr);
  return r;
}

double loss_and_gradient(const ModelState& model, const Batch& batch,
                         std::span<double> grad) {
  if (grad.size() != parameter_count(model.arch)) {
    throw std::invalid_argument("gradient buffer has wrong length");
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> logits;
  return run(model, batch, logits, grad.data());
}

std::vector<double> backward(const ModelState& model, const Batch& batch) {
  std::vector<double> grad(parameter_count(model.arch));
  loss_and_gradient(model, batch, grad);
  return grad;
}

double fd_check(const ModelState& model, const Batch& batch,
                std::span<const std::size_t> coords, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw std::invalid_argument("fd_check: step h must be positive");
  }
  const auto analytic = backward(model, batch);
  ModelState probe = model;
  double worst = 0.0;
  for (std::size_t c : coords) {
    if (c >= probe.params.size()) {
      throw std::invalid_argument("fd_check: coordinate out of range");
    }
    const double orig = probe.params[c];
    probe.params[c] = orig + h;
    const double up = forward_loss(probe, batch).loss;
    probe.params[c] = orig - h;
    const double down = forward_loss(probe, batch).loss;
    probe.params[c] = orig;
    const double fd = (up - down) / (2.0 * h);
    const double bp = analytic[c];
    const double denom = std::max({std::abs(fd), std::abs(bp), 1e-8});
    worst = std::max(worst, std::abs(fd - bp) / denom);
  }
  return worst;
}

std::vector<int> predict(const ForwardResult& result, std::size_t classes) {
  std::vector<int> out(result.logits.size() / classes);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double* z = result.logits.data() + i * classes;
    out[i] = static_cast<int>(std::max_element(z, z + classes) - z);
  }
  return out;
}

}  // namespace arturo
