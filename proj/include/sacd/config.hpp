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
#include <string>
#include <vector>

namespace sacd {

// Everything that determines a training run. Paths and process layout are
// deliberately not part of it, so sync and async runs of the same config
// share a hash.
struct TrainerConfig {
  std::string env = "pendulum";
  std::optional<double> target_entropy;  // empty = -1 per action dimension
  double gamma = 0.99;
  double tau = 0.005;
  double learning_rate = 3e-4;
  std::size_t batch_size = 256;
  std::size_t buffer_capacity = 1000000;
  std::size_t total_steps = 30000;
  std::size_t gradient_steps = 1;
  int history = -1;  // -1 = environment default
  std::uint64_t seed = 0;
  std::size_t initial_random_steps = 1000;
  std::size_t action_smoothing_episodes = 0;
  double action_smoothing = 0.8;
  std::size_t eval_interval = 1000;
  std::size_t eval_episodes = 10;
  std::size_t hidden_units = 256;
  std::size_t hidden_layers = 2;
  std::size_t checkpoint_interval = 1000;
  std::string temperature_mode = "adam";  // adam | plain
  std::optional<double> fixed_alpha;      // disables temperature learning
  double initial_log_alpha = 0.0;
  double reward_scale = 1.0;

  // Sets one key from its text form; throws std::invalid_argument on unknown
  // keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  // Reads `key=value` lines; '#' starts a comment.
  void load_file(const std::string& path);
  void validate() const;

  // Target entropy and history length with "auto" resolved for the env.
  double resolved_target_entropy() const;
  std::size_t resolved_history() const;
  std::vector<std::size_t> hidden() const;

  // Canonical `key=value` lines of the resolved config, in fixed order.
  std::string to_text() const;
  std::uint64_t hash() const;
};

}  // namespace sacd
