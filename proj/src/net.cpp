// Copyright 2026 The sacdesk Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sacd/net.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "sacd/kernels.hpp"
#include "sacd/rng.hpp"

namespace sacd {
namespace {

// Branch-free scan: an all-ones exponent marks inf or nan.
bool finite_span(std::span<const double> v) {
  constexpr std::uint64_t kExp = 0x7ff0000000000000ULL;
  std::uint64_t bad = 0;
  for (double x : v) bad |= static_cast<std::uint64_t>((std::bit_cast<std::uint64_t>(x) & kExp) == kExp);
  return bad == 0;
}

}  // namespace

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<std::size_t> NetworkParams::dims() const {
  std::vector<std::size_t> d;
  if (layers.empty()) return d;
  d.push_back(input_dim());
  for (const auto& l : layers) d.push_back(l.out_dim());
  return d;
}

void validate(const NetworkParams& params) {
  if (params.layers.empty()) throw std::invalid_argument("network has no layers");
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    if (l.bias.size() != l.out_dim()) {
      throw std::invalid_argument("layer " + std::to_string(i) + ": bias size mismatch");
    }
    if (i > 0 && params.layers[i - 1].out_dim() != l.in_dim()) {
      throw std::invalid_argument("layer " + std::to_string(i) + ": input dim " +
                                  std::to_string(l.in_dim()) + " does not chain with " +
                                  std::to_string(params.layers[i - 1].out_dim()));
    }
    for (double w : l.weight.values())
      if (!std::isfinite(w)) throw std::invalid_argument("non-finite weight in layer " + std::to_string(i));
    for (double b : l.bias)
      if (!std::isfinite(b)) throw std::invalid_argument("non-finite bias in layer " + std::to_string(i));
  }
}

NetworkParams init_network(std::span<const std::size_t> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw std::invalid_argument("init_network: need at least two dims");
  for (std::size_t d : dims)
    if (d == 0) throw std::invalid_argument("init_network: dims must be positive");
  Rng rng(seed);
  NetworkParams p;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer layer;
    layer.weight = Matrix(dims[i + 1], dims[i]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[i]));
    for (double& w : layer.weight.values()) w = rng.uniform(-bound, bound);
    layer.bias.assign(dims[i + 1], 0.0);
    layer.activation = (i + 2 == dims.size()) ? Activation::kIdentity : Activation::kRelu;
    p.layers.push_back(std::move(layer));
  }
  return p;
}

NetworkParams init_network(std::initializer_list<std::size_t> dims, std::uint64_t seed) {
  return init_network(std::span<const std::size_t>(dims.begin(), dims.size()), seed);
}

ForwardCache forward(const NetworkParams& params, Matrix input) {
  if (params.layers.empty()) throw std::invalid_argument("forward: empty network");
  if (input.cols() != params.input_dim()) {
    throw std::invalid_argument("forward: input dim " + std::to_string(input.cols()) +
                                " != network input dim " + std::to_string(params.input_dim()));
  }
  ForwardCache cache;
  cache.activations.reserve(params.layers.size() + 1);
  cache.activations.push_back(std::move(input));
  for (const auto& layer : params.layers) {
    const Matrix& in = cache.activations.back();
    Matrix out(in.rows(), layer.out_dim());
    kernels::broadcast_rows(layer.bias, out);
    kernels::gemm_accumulate(in, kernels::transpose(layer.weight), out);
    if (layer.activation == Activation::kRelu) kernels::relu_inplace(out);
    cache.activations.push_back(std::move(out));
  }
  return cache;
}

std::vector<double> forward(const NetworkParams& params, std::span<const double> input) {
  Matrix in(1, input.size(), std::vector<double>(input.begin(), input.end()));
  return forward(params, std::move(in)).output().values();
}

GradientBundle GradientBundle::zeros_like(const NetworkParams& params) {
  GradientBundle g;
  for (const auto& l : params.layers)
    g.layers.push_back({Matrix(l.out_dim(), l.in_dim()), std::vector<double>(l.out_dim(), 0.0)});
  return g;
}

void GradientBundle::add(const GradientBundle& other) {
  if (other.layers.size() != layers.size()) throw std::invalid_argument("GradientBundle::add: layer count");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& w = layers[i].weight.values();
    const auto& ow = other.layers[i].weight.values();
    if (w.size() != ow.size()) throw std::invalid_argument("GradientBundle::add: shape");
    for (std::size_t j = 0; j < w.size(); ++j) w[j] += ow[j];
    for (std::size_t j = 0; j < layers[i].bias.size(); ++j) layers[i].bias[j] += other.layers[i].bias[j];
  }
}

void GradientBundle::scale(double factor) {
  for (auto& l : layers) {
    for (double& w : l.weight.values()) w *= factor;
    for (double& b : l.bias) b *= factor;
  }
  for (double& x : input.values()) x *= factor;
}

bool GradientBundle::all_finite() const {
  for (const auto& l : layers)
    if (!finite_span(l.weight.values()) || !finite_span(l.bias)) return false;
  return finite_span(input.values());
}

std::vector<double> GradientBundle::flatten() const {
  std::vector<double> out;
  for (const auto& l : layers) {
    out.insert(out.end(), l.weight.values().begin(), l.weight.values().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

GradientBundle backward(const NetworkParams& params, const ForwardCache& cache,
                        const Matrix& output_grad, BackwardMode mode) {
  const std::size_t n_layers = params.layers.size();
  if (cache.activations.size() != n_layers + 1) {
    throw std::invalid_argument("backward: cache does not match network depth");
  }
  for (std::size_t i = 0; i < n_layers; ++i) {
    const auto& l = params.layers[i];
    if (cache.activations[i].cols() != l.in_dim() || cache.activations[i + 1].cols() != l.out_dim()) {
      throw std::invalid_argument("backward: cache shape mismatch at layer " + std::to_string(i));
    }
  }
  if (!output_grad.same_shape(cache.output())) {
    throw std::invalid_argument("backward: output_grad shape mismatch");
  }
  const bool want_params = mode != BackwardMode::kInputOnly;
  const bool want_input = mode != BackwardMode::kParametersOnly;

  GradientBundle grads;
  grads.layers.resize(n_layers);
  Matrix delta = output_grad;
  for (std::size_t idx = n_layers; idx-- > 0;) {
    const auto& layer = params.layers[idx];
    if (layer.activation == Activation::kRelu) kernels::relu_mask(cache.activations[idx + 1], delta);
    auto& lg = grads.layers[idx];
    if (want_params) {
      lg.weight = Matrix(layer.out_dim(), layer.in_dim());
      kernels::gemm_tn_accumulate(delta, cache.activations[idx], lg.weight);
      lg.bias.assign(layer.out_dim(), 0.0);
      kernels::column_sums_accumulate(delta, lg.bias);
    }
    if (idx > 0 || want_input) {
      Matrix prev(delta.rows(), layer.in_dim());
      kernels::gemm_accumulate(delta, layer.weight, prev);
      delta = std::move(prev);
    }
  }
  if (want_input) grads.input = std::move(delta);
  return grads;
}

std::vector<double> flatten(const NetworkParams& params) {
  std::vector<double> out;
  out.reserve(params.parameter_count());
  for (const auto& l : params.layers) {
    out.insert(out.end(), l.weight.values().begin(), l.weight.values().end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

void unflatten(std::span<const double> values, NetworkParams& params) {
  if (values.size() != params.parameter_count()) throw std::invalid_argument("unflatten: size mismatch");
  std::size_t off = 0;
  for (auto& l : params.layers) {
    for (double& w : l.weight.values()) w = values[off++];
    for (double& b : l.bias) b = values[off++];
  }
}

AdamState make_adam(std::size_t parameter_count, AdamConfig config) {
  AdamState s;
  s.config = config;
  s.first_moment.assign(parameter_count, 0.0);
  s.second_moment.assign(parameter_count, 0.0);
  return s;
}

AdamState make_adam(const NetworkParams& params, AdamConfig config) {
  return make_adam(params.parameter_count(), config);
}

namespace {

struct AdamCoefficients {
  double step_size;
  double bias2;
};

AdamCoefficients advance(AdamState& state) {
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(state.config.beta1, t);
  const double bias2 = 1.0 - std::pow(state.config.beta2, t);
  return {state.config.learning_rate / bias1, bias2};
}

// One contiguous run of parameters starting at moment offset `off`.
void adam_run(double* p, const double* g, std::size_t n, std::size_t off, AdamState& s,
              AdamCoefficients c) {
  const double b1 = s.config.beta1;
  const double b2 = s.config.beta2;
  const double eps = s.config.epsilon;
  double* m = s.first_moment.data() + off;
  double* v = s.second_moment.data() + off;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    p[i] -= c.step_size * m[i] / (std::sqrt(v[i] / c.bias2) + eps);
  }
}

void check_finite(std::span<const double> g) {
  if (!finite_span(g)) throw std::invalid_argument("adam: non-finite gradient");
}

}  // namespace

void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw std::invalid_argument("adam_update: size mismatch");
  }
  check_finite(grads);
  const auto c = advance(state);
  adam_run(params.data(), grads.data(), params.size(), 0, state, c);
}

void adam_step(NetworkParams& params, AdamState& state, const GradientBundle& grads) {
  if (grads.layers.size() != params.layers.size() ||
      state.first_moment.size() != params.parameter_count() ||
      state.second_moment.size() != params.parameter_count()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    if (!grads.layers[i].weight.same_shape(params.layers[i].weight) ||
        grads.layers[i].bias.size() != params.layers[i].bias.size()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch at layer " + std::to_string(i));
    }
    check_finite(grads.layers[i].weight.values());
    check_finite(grads.layers[i].bias);
  }
  const auto c = advance(state);
  std::size_t off = 0;
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& l = params.layers[i];
    const auto& g = grads.layers[i];
    adam_run(l.weight.data(), g.weight.data(), l.weight.size(), off, state, c);
    off += l.weight.size();
    adam_run(l.bias.data(), g.bias.data(), l.bias.size(), off, state, c);
    off += l.bias.size();
  }
}

void polyak_average(NetworkParams& target, const NetworkParams& source, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("polyak_average: tau must be in (0, 1]");
  if (target.layers.size() != source.layers.size()) throw std::invalid_argument("polyak_average: depth mismatch");
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    auto& t = target.layers[i];
    const auto& s = source.layers[i];
    if (!t.weight.same_shape(s.weight) || t.bias.size() != s.bias.size()) {
      throw std::invalid_argument("polyak_average: shape mismatch at layer " + std::to_string(i));
    }
    if (tau == 1.0) {
      t = s;
      continue;
    }
    auto blend = [tau](double& dst, double src) { dst = tau * src + (1.0 - tau) * dst; };
    for (std::size_t j = 0; j < t.weight.size(); ++j) blend(t.weight.values()[j], s.weight.values()[j]);
    for (std::size_t j = 0; j < t.bias.size(); ++j) blend(t.bias[j], s.bias[j]);
  }
}

void write_network(ByteWriter& out, const NetworkParams& params) {
  out.u64(params.layers.size());
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& l = params.layers[i];
    out.u64(i);
    out.u64(l.weight.rows());
    out.u64(l.weight.cols());
    out.u64(static_cast<std::uint64_t>(l.activation));
    out.f64_array(l.weight.values());
    out.f64_array(l.bias);
  }
}

NetworkParams read_network(ByteReader& in) {
  constexpr std::uint64_t kMaxDim = 1 << 20;
  const std::size_t start = in.stream_offset();
  const std::uint64_t n = in.u64();
  if (n == 0 || n > 64) throw DecodeError("network fragment: bad layer count " + std::to_string(n), start);
  NetworkParams p;
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::size_t at = in.stream_offset();
    if (in.u64() != i) throw DecodeError("network fragment: layer index out of order", at);
    const std::uint64_t rows = in.u64();
    const std::uint64_t cols = in.u64();
    const std::uint64_t act = in.u64();
    if (rows == 0 || cols == 0 || rows > kMaxDim || cols > kMaxDim || rows * cols > (kMaxDim << 4)) {
      throw DecodeError("network fragment: bad layer shape", at);
    }
    if (act > 1) throw DecodeError("network fragment: unknown activation", at);
    if ((rows * cols + rows) > in.remaining() / 8) throw DecodeError("network fragment: layer exceeds payload", at);
    DenseLayer l;
    l.weight = Matrix(rows, cols);
    in.f64_array(l.weight.values());
    l.bias.resize(rows);
    in.f64_array(l.bias);
    l.activation = static_cast<Activation>(act);
    if (!p.layers.empty() && p.layers.back().out_dim() != cols) {
      throw DecodeError("network fragment: layer dims do not chain", at);
    }
    p.layers.push_back(std::move(l));
  }
  return p;
}

void write_adam(ByteWriter& out, const AdamState& s) {
  out.u64(s.step);
  out.f64(s.config.learning_rate);
  out.f64(s.config.beta1);
  out.f64(s.config.beta2);
  out.f64(s.config.epsilon);
  out.u64(s.first_moment.size());
  out.f64_array(s.first_moment);
  out.f64_array(s.second_moment);
}

AdamState read_adam(ByteReader& in) {
  AdamState s;
  s.step = in.u64();
  s.config.learning_rate = in.f64();
  s.config.beta1 = in.f64();
  s.config.beta2 = in.f64();
  s.config.epsilon = in.f64();
  const std::size_t at = in.stream_offset();
  const std::uint64_t n = in.u64();
  if (n > in.remaining() / 16) throw DecodeError("adam fragment: moment count exceeds payload", at);
  s.first_moment.resize(n);
  s.second_moment.resize(n);
  in.f64_array(s.first_moment);
  in.f64_array(s.second_moment);
  return s;
}

}  // namespace sacd
