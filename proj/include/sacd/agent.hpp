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
#include <optional>

#include "sacd/config.hpp"
#include "sacd/critic.hpp"
#include "sacd/policy.hpp"
#include "sacd/rng.hpp"
#include "sacd/temperature.hpp"

namespace sacd {

struct UpdateStats {
  double q_loss = 0.0;  // loss1 + loss2
  double q1_loss = 0.0;
  double q2_loss = 0.0;
  double policy_loss = 0.0;
  double alpha_loss = 0.0;
  double entropy_estimate = 0.0;
  double alpha = 0.0;           // value used by this step
  double grad_log_alpha = 0.0;  // d J(alpha) / d log alpha
  double log_alpha_after = 0.0;
};

// Networks, optimisers and temperature of one learner.
struct SacAgent {
  PolicyHead policy;
  CriticPair critics;
  TemperatureState temperature;
  AdamState policy_adam;
  AdamState q1_adam;
  AdamState q2_adam;
  double gamma = 0.99;
  std::optional<double> fixed_alpha;

  double current_alpha() const { return fixed_alpha ? *fixed_alpha : alpha(temperature); }

  friend bool operator==(const SacAgent&, const SacAgent&) = default;
};

SacAgent make_agent(const TrainerConfig& config, std::size_t obs_dim, std::size_t action_dim);

// One gradient step: critics, then the policy against the updated critics,
// then the temperature, then the target networks. Noise for the next-state
// actions and the policy reparameterisation is drawn from `noise_rng` in that
// order. Throws NonFiniteError before applying a stage whose loss or
// gradients are non-finite; earlier stages of the same step stay applied.
UpdateStats sac_update(SacAgent& agent, const Minibatch& batch, Rng& noise_rng);

}  // namespace sacd
