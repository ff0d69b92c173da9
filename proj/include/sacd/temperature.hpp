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

#include <cstddef>
#include <span>

#include "sacd/net.hpp"

namespace sacd {

enum class TemperatureMode {
  kAdam,           // scalar Adam on d J / d log_alpha
  kPlainGradient,  // log_alpha -= learning_rate * d J / d log_alpha
};

// The entropy dual variable, kept as log_alpha so alpha = exp(log_alpha) > 0.
struct TemperatureState {
  double log_alpha = 0.0;
  double target_entropy = -1.0;
  TemperatureMode mode = TemperatureMode::kAdam;
  AdamState adam = make_adam(1);
  friend bool operator==(const TemperatureState&, const TemperatureState&) = default;
};

TemperatureState make_temperature(double target_entropy, double learning_rate,
                                  TemperatureMode mode = TemperatureMode::kAdam,
                                  double initial_log_alpha = 0.0);

double alpha(const TemperatureState& state);

struct TemperatureLoss {
  double loss = 0.0;              // mean(-alpha * log_prob - alpha * target)
  double grad_alpha = 0.0;        // entropy_estimate - target
  double grad_log_alpha = 0.0;    // alpha * grad_alpha
  double entropy_estimate = 0.0;  // -mean(log_prob)
};

TemperatureLoss temperature_loss_and_grad(const TemperatureState& state,
                                          std::span<const double> log_probs);

void temperature_update(TemperatureState& state, double grad_log_alpha);

// -1 nat per action dimension.
double default_target_entropy(std::size_t action_dim);

}  // namespace sacd
