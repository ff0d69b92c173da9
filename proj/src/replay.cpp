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

#include "sacd/replay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sacd {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t action_dim)
    : capacity_(capacity), obs_dim_(obs_dim), action_dim_(action_dim) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(const Transition& t) {
  if (t.obs.size() != obs_dim_ || t.next_obs.size() != obs_dim_ || t.action.size() != action_dim_) {
    throw std::invalid_argument("ReplayBuffer::push: schema mismatch (obs " + std::to_string(t.obs.size()) +
                                "/" + std::to_string(obs_dim_) + ", action " +
                                std::to_string(t.action.size()) + "/" + std::to_string(action_dim_) + ")");
  }
  if (!std::isfinite(t.reward)) throw std::invalid_argument("ReplayBuffer::push: non-finite reward");
  // Storage grows lazily up to capacity, then the ring overwrites in place.
  if (size_ < capacity_ && next_ == size_) {
    obs_.insert(obs_.end(), t.obs.begin(), t.obs.end());
    action_.insert(action_.end(), t.action.begin(), t.action.end());
    next_obs_.insert(next_obs_.end(), t.next_obs.begin(), t.next_obs.end());
    reward_.push_back(t.reward);
    done_.push_back(t.done);
    episode_end_.push_back(t.episode_end);
    timestamp_.push_back(t.timestamp);
    ++size_;
  } else {
    std::copy(t.obs.begin(), t.obs.end(), obs_.begin() + static_cast<std::ptrdiff_t>(next_ * obs_dim_));
    std::copy(t.action.begin(), t.action.end(), action_.begin() + static_cast<std::ptrdiff_t>(next_ * action_dim_));
    std::copy(t.next_obs.begin(), t.next_obs.end(), next_obs_.begin() + static_cast<std::ptrdiff_t>(next_ * obs_dim_));
    reward_[next_] = t.reward;
    done_[next_] = t.done;
    episode_end_[next_] = t.episode_end;
    timestamp_[next_] = t.timestamp;
  }
  next_ = (next_ + 1) % capacity_;
  ++insertions_;
  if (t.episode_end) ++episodes_;
}

Minibatch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (size_ == 0) throw std::invalid_argument("ReplayBuffer::sample: buffer is empty");
  Minibatch mb;
  mb.obs = Matrix(batch_size, obs_dim_);
  mb.action = Matrix(batch_size, action_dim_);
  mb.next_obs = Matrix(batch_size, obs_dim_);
  mb.reward.resize(batch_size);
  mb.done.resize(batch_size);
  mb.indices.resize(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const std::size_t i = rng.index(size_);
    mb.indices[b] = i;
    std::copy_n(obs_.begin() + static_cast<std::ptrdiff_t>(i * obs_dim_), obs_dim_, mb.obs.row(b).begin());
    std::copy_n(action_.begin() + static_cast<std::ptrdiff_t>(i * action_dim_), action_dim_, mb.action.row(b).begin());
    std::copy_n(next_obs_.begin() + static_cast<std::ptrdiff_t>(i * obs_dim_), obs_dim_, mb.next_obs.row(b).begin());
    mb.reward[b] = reward_[i];
    mb.done[b] = done_[i];
  }
  return mb;
}

Transition ReplayBuffer::at(std::size_t slot) const {
  if (slot >= size_) throw std::out_of_range("ReplayBuffer::at: slot not held");
  Transition t;
  auto o = obs_.begin() + static_cast<std::ptrdiff_t>(slot * obs_dim_);
  auto a = action_.begin() + static_cast<std::ptrdiff_t>(slot * action_dim_);
  auto n = next_obs_.begin() + static_cast<std::ptrdiff_t>(slot * obs_dim_);
  t.obs.assign(o, o + static_cast<std::ptrdiff_t>(obs_dim_));
  t.action.assign(a, a + static_cast<std::ptrdiff_t>(action_dim_));
  t.next_obs.assign(n, n + static_cast<std::ptrdiff_t>(obs_dim_));
  t.reward = reward_[slot];
  t.done = done_[slot];
  t.episode_end = episode_end_[slot];
  t.timestamp = timestamp_[slot];
  return t;
}

std::size_t ReplayBuffer::oldest_slot() const { return size_ < capacity_ ? 0 : next_; }

}  // namespace sacd
