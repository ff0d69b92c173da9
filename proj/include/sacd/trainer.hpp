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
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sacd/agent.hpp"
#include "sacd/checkpoint.hpp"
#include "sacd/config.hpp"
#include "sacd/envs.hpp"
#include "sacd/replay.hpp"
#include "sacd/rng.hpp"

namespace sacd {

// ---------------------------------------------------------------------------
// Evaluation

struct EvalStats {
  std::size_t episodes = 0;
  double return_mean = 0.0;
  double return_min = 0.0;
  double return_max = 0.0;
  double length_mean = 0.0;
  double terminal_fraction = 0.0;  // episodes that ended in a terminal state
  double progress_mean = 0.0;      // final task progress
  std::vector<double> returns;
};

// Deterministic-policy rollouts on freshly seeded environments; the seeds
// depend only on `seed`, so repeated evaluations see the same start states.
EvalStats evaluate_policy(const PolicyHead& policy, const TrainerConfig& config, std::size_t episodes,
                          std::uint64_t seed);

// Uniform random actions in [-1, 1].
EvalStats evaluate_random(const TrainerConfig& config, std::size_t episodes, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Actor: rolls out whole episodes with a fixed policy snapshot.

struct StepRecord {
  std::uint64_t step = 0;
  std::uint64_t timestamp = 0;
  DoneReason done = DoneReason::kNone;
  std::vector<double> raw;      // raw state after the step
  std::vector<double> action;   // action applied
  std::vector<double> initial;  // raw state before the step; step 0 only
  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct Episode {
  std::uint64_t id = 0;
  std::vector<StepRecord> records;
  std::vector<Transition> transitions;  // env-side labels
  double episode_return = 0.0;
};

class Actor {
 public:
  Actor(const TrainerConfig& config, std::uint64_t actor_index, std::uint64_t incarnation = 0,
        std::uint64_t epoch = 0);

  // `env_steps` and `episodes` are the learner's counters at the snapshot;
  // they drive the warm-up and smoothing schedules.
  void load_policy(const PolicyHead& policy, std::uint64_t version, std::uint64_t env_steps,
                   std::uint64_t episodes);
  Episode run_episode();

  std::uint64_t policy_version() const { return version_; }
  bool has_policy() const { return loaded_; }
  std::uint64_t episodes_run() const { return local_episodes_; }

 private:
  TrainerConfig config_;
  std::unique_ptr<Environment> env_;
  Rng rng_;
  std::uint64_t incarnation_;
  std::uint64_t epoch_;
  PolicyHead policy_;
  bool loaded_ = false;
  std::uint64_t version_ = 0;
  std::uint64_t base_steps_ = 0;
  std::uint64_t base_episodes_ = 0;
  std::uint64_t steps_since_load_ = 0;
  std::uint64_t episodes_since_load_ = 0;
  std::uint64_t local_episodes_ = 0;
  std::uint64_t clock_ = 0;
};

std::uint64_t actor_seed(const TrainerConfig& config, std::uint64_t actor_index, std::uint64_t incarnation);

// ---------------------------------------------------------------------------
// CSV learning curve

inline constexpr const char* kCsvHeader =
    "step,episodes,eval_return_mean,eval_return_min,eval_return_max,entropy_estimate,alpha,q_loss,"
    "policy_loss,alpha_loss";

struct CsvRow {
  std::uint64_t step = 0;
  std::uint64_t episodes = 0;
  double eval_return_mean = 0.0;
  double eval_return_min = 0.0;
  double eval_return_max = 0.0;
  double entropy_estimate = 0.0;
  double alpha = 0.0;
  double q_loss = 0.0;
  double policy_loss = 0.0;
  double alpha_loss = 0.0;
};

std::string config_comment_block(const TrainerConfig& config);
std::string format_csv_row(const CsvRow& row);

class CsvLog {
 public:
  // Truncates `path` and writes the config block and header.
  CsvLog(const std::filesystem::path& path, const TrainerConfig& config);
  // Reopens for append, e.g. after a learner restart.
  static CsvLog append(const std::filesystem::path& path);
  void write(const CsvRow& row);

 private:
  CsvLog() = default;
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Learner: replay buffer, gradient steps, logging and versioning.

class Learner {
 public:
  explicit Learner(const TrainerConfig& config);
  Learner(const TrainerConfig& config, const Checkpoint& restore);

  void ingest(const Transition& t);
  // Runs `n` gradient steps if the buffer holds a full batch; returns the
  // number taken.
  std::size_t train(std::size_t n);
  // Ingest an episode and take G steps per transition.
  void process_episode(const std::vector<Transition>& transitions);

  // Evaluates and emits a row when the eval step has been reached.
  std::optional<CsvRow> log_if_due();
  // Row for the current state regardless of the schedule, if anything
  // happened since the last one.
  std::optional<CsvRow> log_final();

  // Hands the policy on: increments the version and returns true when a
  // periodic checkpoint file is due.
  bool publish();
  // Free-running variant: the version only moves when a checkpoint is due.
  bool publish_if_due();
  // Unconditional publish, e.g. at the end of a run.
  void publish_now();

  Checkpoint checkpoint() const;
  const SacAgent& agent() const { return agent_; }
  const LearnerCounters& counters() const { return counters_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const TrainerConfig& config() const { return config_; }
  bool done() const { return counters_.env_steps >= config_.total_steps; }

  // Called after every gradient step with the stats and the learner's env
  // step count at that time.
  std::function<void(const UpdateStats&, std::uint64_t env_steps)> on_update;

 private:
  CsvRow make_row(const EvalStats& eval);

  TrainerConfig config_;
  std::uint64_t config_hash_;
  SacAgent agent_;
  ReplayBuffer buffer_;
  Rng sample_rng_;
  Rng noise_rng_;
  LearnerCounters counters_;
  std::uint64_t last_row_step_ = 0;
  bool logged_any_ = false;
  // running means since the last row
  double sum_entropy_ = 0.0, sum_q_ = 0.0, sum_pi_ = 0.0, sum_alpha_loss_ = 0.0;
  std::size_t n_updates_ = 0;
};

// ---------------------------------------------------------------------------
// Synchronous training

struct RunOptions {
  std::optional<std::filesystem::path> csv_out;
  std::optional<std::filesystem::path> checkpoint_dir;
  // One line per published version: version, env steps, gradient steps and
  // a hash of the full serialized learner state.
  std::optional<std::filesystem::path> trace_out;
  std::function<void(const UpdateStats&, std::uint64_t env_steps)> on_update;
};

struct TrainResult {
  LearnerCounters counters;
  std::vector<CsvRow> rows;
  Checkpoint final_checkpoint;
};

std::string trace_line(const Checkpoint& ckpt);

TrainResult train_sync(const TrainerConfig& config, const RunOptions& options = {});

}  // namespace sacd
