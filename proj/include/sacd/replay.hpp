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
#include <vector>

#include "sacd/critic.hpp"
#include "sacd/rng.hpp"

namespace sacd {

struct Transition {
  std::vector<double> obs;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_obs;
  // Terminal for bootstrapping (falls, goal reached). Time limits are not.
  bool done = false;
  // Last transition of its episode, for any reason.
  bool episode_end = false;
  std::uint64_t timestamp = 0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

struct ReplayStats {
  std::size_t size = 0;
  std::uint64_t insertions = 0;
  std::uint64_t episodes = 0;
  friend bool operator==(const ReplayStats&, const ReplayStats&) = default;
};

// Bounded FIFO ring of transitions with uniform sampling with replacement.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t action_dim);

  void push(const Transition& t);
  Minibatch sample(std::size_t batch_size, Rng& rng) const;
  ReplayStats stats() const { return {size_, insertions_, episodes_}; }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  // Transition held in ring slot `slot` (slot < size()).
  Transition at(std::size_t slot) const;
  // Slot of the oldest held transition.
  std::size_t oldest_slot() const;

 private:
  std::size_t capacity_;
  std::size_t obs_dim_;
  std::size_t action_dim_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
  std::uint64_t insertions_ = 0;
  std::uint64_t episodes_ = 0;
  std::vector<double> obs_;
  std::vector<double> action_;
  std::vector<double> next_obs_;
  std::vector<double> reward_;
  std::vector<std::uint8_t> done_;
  std::vector<std::uint8_t> episode_end_;
  std::vector<std::uint64_t> timestamp_;
};

}  // namespace sacd
