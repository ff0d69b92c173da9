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

#include "sacd/net.hpp"

namespace sacd {

// Network from observations to 2 * action_dim outputs: the first half is the
// Gaussian mean, the second half the raw log standard deviation, clamped to
// [log_std_min, log_std_max].
struct PolicyHead {
  NetworkParams net;
  std::size_t action_dim = 0;
  double log_std_min = -20.0;
  double log_std_max = 2.0;

  std::size_t obs_dim() const { return net.input_dim(); }
  friend bool operator==(const PolicyHead&, const PolicyHead&) = default;
};

PolicyHead make_policy(std::size_t obs_dim, std::size_t action_dim,
                       std::span<const std::size_t> hidden, std::uint64_t seed);

struct GaussianParams {
  std::vector<double> mean;
  std::vector<double> std;
};

GaussianParams policy_distribution(const PolicyHead& head, std::span<const double> obs);

struct ActionSample {
  std::vector<double> noise;
  std::vector<double> pre_squash;
  std::vector<double> action;
  double log_prob = 0.0;
};

// u = mean + std * noise, a = tanh(u).
ActionSample sample_action(std::span<const double> mean, std::span<const double> std,
                           std::span<const double> noise);

// log(1 - tanh(u)^2) without cancellation for large |u|.
double log1m_tanh_sq(double u);

// Density of a = tanh(u) in nats: Gaussian log-density of u minus the
// tanh Jacobian term, summed over dimensions.
double log_prob(std::span<const double> mean, std::span<const double> std,
                std::span<const double> pre_squash);

// tanh(mean); evaluation-time action.
std::vector<double> deterministic_action(const PolicyHead& head, std::span<const double> obs);

// Batched reparameterized sample, keeping what the backward pass needs.
struct PolicyBatch {
  ForwardCache cache;
  Matrix mean;
  Matrix log_std;
  Matrix std;
  Matrix noise;
  Matrix pre_squash;
  Matrix action;
  std::vector<double> log_prob;
  // 1 where the raw log-std output was inside the clamp range.
  std::vector<std::uint8_t> log_std_active;
};

PolicyBatch sample_batch(const PolicyHead& head, Matrix obs, const Matrix& noise);

// Parameter gradient of sum_b [ dlogp[b] * log_prob[b] + daction.row(b) . action.row(b) ]
// with the noise held fixed.
GradientBundle policy_backward(const PolicyHead& head, const PolicyBatch& batch,
                               std::span<const double> dlogp, const Matrix& daction);

}  // namespace sacd
