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

#include "sacd/temperature.hpp"

#include <cmath>
#include <stdexcept>

namespace sacd {

TemperatureState make_temperature(double target_entropy, double learning_rate, TemperatureMode mode,
                                  double initial_log_alpha) {
  TemperatureState s;
  s.log_alpha = initial_log_alpha;
  s.target_entropy = target_entropy;
  s.mode = mode;
  AdamConfig cfg;
  cfg.learning_rate = learning_rate;
  s.adam = make_adam(1, cfg);
  return s;
}

double alpha(const TemperatureState& state) { return std::exp(state.log_alpha); }

TemperatureLoss temperature_loss_and_grad(const TemperatureState& state,
                                          std::span<const double> log_probs) {
  if (log_probs.empty()) throw std::invalid_argument("temperature_loss: empty batch");
  double sum = 0.0;
  for (double lp : log_probs) sum += lp;
  const double mean_lp = sum / static_cast<double>(log_probs.size());
  const double a = alpha(state);
  TemperatureLoss out;
  out.entropy_estimate = -mean_lp;
  out.loss = -a * mean_lp - a * state.target_entropy;
  out.grad_alpha = out.entropy_estimate - state.target_entropy;
  out.grad_log_alpha = a * out.grad_alpha;
  return out;
}

void temperature_update(TemperatureState& state, double grad_log_alpha) {
  if (!std::isfinite(grad_log_alpha)) throw std::invalid_argument("temperature_update: non-finite gradient");
  if (state.mode == TemperatureMode::kPlainGradient) {
    state.log_alpha -= state.adam.config.learning_rate * grad_log_alpha;
  } else {
    double p = state.log_alpha;
    const double g = grad_log_alpha;
    adam_update({&p, 1}, {&g, 1}, state.adam);
    state.log_alpha = p;
  }
  if (!std::isfinite(state.log_alpha)) throw std::invalid_argument("temperature_update: log_alpha diverged");
}

double default_target_entropy(std::size_t action_dim) {
  if (action_dim == 0) throw std::invalid_argument("default_target_entropy: action_dim must be positive");
  return -1.0 * static_cast<double>(action_dim);
}

}  // namespace sacd
