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
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "sacd/agent.hpp"

namespace sacd {

inline constexpr std::uint32_t kCheckpointFormat = 1;
inline constexpr char kCheckpointMagic[4] = {'S', 'A', 'C', 'A'};
inline constexpr const char* kCheckpointFile = "latest.ckpt";

struct LearnerCounters {
  std::uint64_t version = 0;
  std::uint64_t env_steps = 0;
  std::uint64_t grad_steps = 0;
  std::uint64_t episodes = 0;
  std::uint64_t next_eval_step = 0;
  std::uint64_t next_publish_step = 0;
  friend bool operator==(const LearnerCounters&, const LearnerCounters&) = default;
};

struct Checkpoint {
  std::uint64_t config_hash = 0;
  LearnerCounters counters;
  SacAgent agent;
  std::vector<std::uint64_t> sample_rng;
  std::vector<std::uint64_t> noise_rng;
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
// Throws DecodeError on truncated or malformed input.
Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes);

// Writes `dir/latest.ckpt` through a temporary file and rename.
void write_checkpoint_file(const std::filesystem::path& dir, const Checkpoint& ckpt);
// Empty when the file does not exist; throws DecodeError when it is corrupt.
std::optional<Checkpoint> read_checkpoint_file(const std::filesystem::path& dir);
// Version from the header only; empty when missing or unreadable.
std::optional<std::uint64_t> peek_checkpoint_version(const std::filesystem::path& dir);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace sacd
