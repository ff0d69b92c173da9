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
#include <string>

#include "sacd/config.hpp"

namespace sacd {

// Files shared by the processes of one async run.
struct RunPaths {
  std::filesystem::path dir;

  std::string learner_socket() const;
  std::string labeler_socket() const;
  std::filesystem::path config_file() const { return dir / "config.txt"; }
  std::filesystem::path ingest_log() const { return dir / "ingest.log"; }
  std::filesystem::path versions_log() const { return dir / "versions.log"; }
  std::filesystem::path done_marker() const { return dir / "done"; }
  std::filesystem::path halted_marker() const { return dir / "halted"; }
};

inline constexpr int kExitNonFinite = 3;

// SIGINT/SIGTERM set a flag the loops poll.
void install_stop_handlers();
bool stop_requested();

struct LearnerOptions {
  std::filesystem::path run_dir;
  std::optional<std::filesystem::path> csv_out;
  std::optional<std::filesystem::path> trace_out;
  bool lockstep = false;
};

struct ActorOptions {
  std::filesystem::path run_dir;
  std::uint32_t index = 0;
  std::uint32_t incarnation = 0;
  bool lockstep = false;
  std::size_t chunk_records = 64;
  std::size_t max_buffered_episodes = 10;
};

// Each returns a process exit code.
int run_learner(const TrainerConfig& config, const LearnerOptions& options);
int run_labeler(const TrainerConfig& config, const std::filesystem::path& run_dir);
int run_actor(const TrainerConfig& config, const ActorOptions& options);

}  // namespace sacd
