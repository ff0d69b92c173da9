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
#include <stdexcept>
#include <vector>

#include "sacd/net.hpp"
#include "sacd/policy.hpp"

namespace sacd {

// Raised when a loss or bootstrap target is NaN or infinite.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Twin Q-networks over concat(obs, action) with their Polyak-averaged targets.
struct CriticPair {
  NetworkParams q1;
  NetworkParams q2;
  NetworkParams target1;
  NetworkParams target2;
  double tau = 0.005;
  friend bool operator==(const CriticPair&, const CriticPair&) = default;
};

CriticPair make_critics(std::size_t obs_dim, std::size_t action_dim,
                        std::span<const std::size_t> hidden, std::uint64_t seed,
                        double tau = 0.005);

struct Minibatch {
  Matrix obs;
  Matrix action;
  Matrix next_obs;
  std::vector<double> reward;
  std::vector<std::uint8_t> done;
  // Buffer slots the rows were drawn from.
  std::vector<std::size_t> indices;

  std::size_t size() const { return reward.size(); }
};

Matrix concat_columns(const Matrix& left, const Matrix& right);

double q_value(const NetworkParams& q, std::span<const double> obs, std::span<const double> action);

// Single-sample estimate min(Qbar1, Qbar2)(s, a~) - alpha * log pi(a~|s), with
// a~ drawn from the policy using `noise`.
double soft_state_value(const CriticPair& critics, const PolicyHead& policy, double alpha,
                        std::span<const double> obs, std::span<const double> noise);

struct QLossResult {
  double loss1 = 0.0;
  double loss2 = 0.0;
  GradientBundle grad1;
  GradientBundle grad2;
  std::vector<double> targets;
};

// Mean squared error of each critic against the shared bootstrap target
// y = r + gamma * (1 - done) * V(s'). The target carries no gradient.
QLossResult q_loss_and_grads(const CriticPair& critics, const PolicyHead& policy, double alpha,
                             const Minibatch& batch, double gamma, const Matrix& next_noise);

struct PolicyLossResult {
  double loss = 0.0;
  GradientBundle grad;
  std::vector<double> log_prob;
};

// mean_b [alpha * log pi(a~|s) - min_i Q_i(s, a~)] with a~ reparameterized.
// The critics are read, never differentiated with respect to their weights.
PolicyLossResult policy_loss_and_grads(const CriticPair& critics, const PolicyHead& policy,
                                       double alpha, const Matrix& obs, const Matrix& noise);

void target_update(CriticPair& critics, double tau);

}  // namespace sacd
