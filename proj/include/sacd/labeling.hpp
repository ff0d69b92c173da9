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
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sacd/envs.hpp"
#include "sacd/wire.hpp"

namespace sacd {

// Rebuilds observations and rewards of one whole episode from its raw
// records, which must be ordered by step starting at 0. Throws
// std::invalid_argument if the records do not form a single episode.
std::vector<LabeledTransition> label_episode(const EnvModel& model, std::size_t history,
                                             std::span<const StepRecord> records);

// Collects trajectory chunks, in any order within an episode, until an
// episode is whole.
class EpisodeAssembler {
 public:
  struct Complete {
    std::uint64_t sender = 0;
    std::uint64_t episode_id = 0;
    std::vector<StepRecord> records;  // ordered by step
  };

  // Returns the episode once its last missing record arrives. Inconsistent
  // chunks drop the episode; so does a chunk from a newer episode of the
  // same sender while an older one is still open, since a sender's stream is
  // ordered and the older one can no longer complete.
  std::optional<Complete> add(std::uint64_t sender, const TrajectoryChunk& chunk);

  // Forgets partial episodes of a sender that went away.
  std::size_t drop_sender(std::uint64_t sender);

  std::size_t pending() const { return open_.size(); }
  std::uint64_t dropped() const { return dropped_; }
  std::vector<std::string> take_reports() { return std::exchange(reports_, {}); }

 private:
  struct Partial {
    std::uint64_t total = 0;
    std::map<std::uint64_t, StepRecord> records;
  };
  using Key = std::pair<std::uint64_t, std::uint64_t>;  // (sender, episode)

  void drop(const Key& key, const std::string& why);

  std::map<Key, Partial> open_;
  std::set<Key> closed_;
  std::vector<std::string> reports_;
  std::uint64_t dropped_ = 0;
};

}  // namespace sacd
