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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sacd/bytes.hpp"
#include "sacd/matrix.hpp"

namespace sacd {

enum class Activation : std::uint8_t { kIdentity = 0, kRelu = 1 };

// One dense layer: out = act(weight * in + bias), weight is out x in.
struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// A feed-forward network: rectifier on hidden layers, identity on the output.
struct NetworkParams {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.front().in_dim(); }
  std::size_t output_dim() const { return layers.back().out_dim(); }
  std::size_t parameter_count() const;
  std::vector<std::size_t> dims() const;
  friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

// Throws std::invalid_argument when layer shapes do not chain or any entry
// is non-finite.
void validate(const NetworkParams& params);

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases.
// `dims` lists input, hidden and output widths; at least two entries.
NetworkParams init_network(std::span<const std::size_t> dims, std::uint64_t seed);
NetworkParams init_network(std::initializer_list<std::size_t> dims, std::uint64_t seed);

// activations[0] is the input, activations[l + 1] the output of layer l.
struct ForwardCache {
  std::vector<Matrix> activations;

  const Matrix& input() const { return activations.front(); }
  const Matrix& output() const { return activations.back(); }
};

// Batched forward pass; each row of `input` is one sample.
ForwardCache forward(const NetworkParams& params, Matrix input);

// Single-sample convenience.
std::vector<double> forward(const NetworkParams& params, std::span<const double> input);

struct LayerGradient {
  Matrix weight;
  std::vector<double> bias;
};

// Gradients mirroring NetworkParams, plus the gradient with respect to the
// batched input.
struct GradientBundle {
  std::vector<LayerGradient> layers;
  Matrix input;

  static GradientBundle zeros_like(const NetworkParams& params);
  void add(const GradientBundle& other);
  void scale(double factor);
  bool all_finite() const;
  // Parameter gradients in canonical order (per layer: weights row-major,
  // then bias).
  std::vector<double> flatten() const;
};

enum class BackwardMode {
  kFull,            // parameter and input gradients
  kInputOnly,       // skip parameter gradients
  kParametersOnly,  // skip the input gradient
};

// Gradients of sum_rows(output . output_grad) with respect to every parameter
// and the input. Gradients are summed over the batch.
GradientBundle backward(const NetworkParams& params, const ForwardCache& cache,
                        const Matrix& output_grad, BackwardMode mode = BackwardMode::kFull);

// Parameters in canonical order, and the inverse.
std::vector<double> flatten(const NetworkParams& params);
void unflatten(std::span<const double> values, NetworkParams& params);

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  friend bool operator==(const AdamState&, const AdamState&) = default;
};

AdamState make_adam(std::size_t parameter_count, AdamConfig config = {});
AdamState make_adam(const NetworkParams& params, AdamConfig config = {});

// Bias-corrected Adam step on flat parameter/gradient arrays. Rejects
// mismatched sizes and non-finite gradients before touching any state.
void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state);
void adam_step(NetworkParams& params, AdamState& state, const GradientBundle& grads);

// target <- tau * source + (1 - tau) * target, elementwise.
void polyak_average(NetworkParams& target, const NetworkParams& source, double tau);

// Checkpoint fragments. Every integer and real is 64-bit little-endian:
// layer count, then per layer (index, rows, cols, activation, weights
// row-major, bias).
void write_network(ByteWriter& out, const NetworkParams& params);
NetworkParams read_network(ByteReader& in);
void write_adam(ByteWriter& out, const AdamState& state);
AdamState read_adam(ByteReader& in);

}  // namespace sacd
