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
#include <vector>

#include "sacd/config.hpp"

namespace sacd {

struct AsyncOptions {
  std::filesystem::path run_dir;
  std::optional<std::filesystem::path> csv_out;
  std::optional<std::filesystem::path> trace_out;
  std::size_t actors = 1;
  bool lockstep = false;
  // Kill and restart each subsystem once, at random checkpoint versions.
  std::optional<std::uint64_t> chaos_seed;
  int restart_delay_ms = 200;
  double timeout_seconds = 0.0;  // 0 = none
  // Binary providing the hidden role subcommands; defaults to this process.
  std::optional<std::filesystem::path> executable;
};

struct AsyncResult {
  int exit_code = 0;
  std::size_t restarts = 0;
  std::vector<std::string> events;
};

// Runs learner, labeler and actors as child processes until the learner
// finishes. Fails before spawning if the run directory already holds a
// checkpoint or a live socket.
AsyncResult run_async(const TrainerConfig& config, const AsyncOptions& options);

}  // namespace sacd
