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
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "sacd/config.hpp"
#include "sacd/oracle.hpp"
#include "sacd/trainer.hpp"

namespace sacd {

// ---------------------------------------------------------------------------
// eval

struct EvalRequest {
  std::filesystem::path checkpoint;  // directory holding latest.ckpt, or the file
  std::string env = "pendulum";
  std::size_t episodes = 10;
  std::uint64_t seed = 0;
  int history = -1;
};

// Throws std::invalid_argument when the checkpoint does not fit the env.
EvalStats cmd_eval(const EvalRequest& request);
void write_eval_csv(std::ostream& out, const EvalStats& stats);

// ---------------------------------------------------------------------------
// sweep

struct SweepRequest {
  TrainerConfig base;
  std::string axis;  // target-entropy | reward-scale
  std::vector<double> values;
  std::vector<std::uint64_t> seeds{0};
  std::size_t final_window = 5;  // CSV rows averaged for the final return
};

struct SweepRow {
  double value = 0.0;
  std::uint64_t seed = 0;
  double final_return = 0.0;
  double final_entropy = 0.0;
  double final_alpha = 0.0;
};

struct SweepResult {
  std::string axis;
  std::vector<SweepRow> rows;
  std::vector<double> value_means;  // per value, averaged over seeds
  double relative_spread = 0.0;
};

// Config of one sweep run.
TrainerConfig sweep_config(const SweepRequest& request, double value, std::uint64_t seed);
// (max - min) / |mean|.
double relative_spread(std::span<const double> values);
SweepResult cmd_sweep(const SweepRequest& request, const std::function<void(const SweepRow&)>& on_row = {});
void write_sweep_csv(std::ostream& out, const SweepResult& result);

// ---------------------------------------------------------------------------
// oracle

// Presets: geometric (1 state, 1 action, R=1), symmetric (1 state, 2 equal
// actions, R=0), bandit (1 state, R=(1,0)), random.
oracle::TabularMDP oracle_preset(const std::string& name, std::size_t states, std::size_t actions, double gamma,
                                 std::uint64_t seed);
void cmd_oracle_solve(std::ostream& out, const oracle::TabularMDP& mdp, double alpha, double tol);
void cmd_oracle_calibrate(std::ostream& out, const oracle::TabularMDP& mdp, std::span<const double> targets,
                          double tol);
void cmd_oracle_curve(std::ostream& out, const oracle::TabularMDP& mdp, std::span<const double> alphas);

}  // namespace sacd
