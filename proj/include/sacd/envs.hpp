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
#include <deque>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sacd {

enum class DoneReason : std::uint8_t {
  kNone = 0,
  kTimeLimit = 1,  // bootstrapped through
  kTerminal = 2,   // fall or goal reached; not bootstrapped
};

struct EnvSpec {
  std::string name;
  std::size_t obs_dim = 0;
  std::size_t action_dim = 0;
  std::size_t raw_dim = 0;
  std::size_t max_steps = 0;
  double dt = 0.0;
  // History length used when the caller asks for the environment default.
  std::size_t default_history = 0;
};

// ---------------------------------------------------------------------------
// Pendulum swing-up. theta = 0 is upright.

struct PendulumState {
  double theta = 0.0;
  double theta_dot = 0.0;
  std::size_t t = 0;
};

struct PendulumStep {
  PendulumState state;
  double reward = 0.0;
  DoneReason done = DoneReason::kNone;
};

inline constexpr std::size_t kPendulumMaxSteps = 200;

double wrap_angle(double theta);
// Cost of the pre-step state and the applied action.
double pendulum_reward(const PendulumState& before, double action);
PendulumStep pendulum_step(const PendulumState& state, double action);

// ---------------------------------------------------------------------------
// Point mass driven by a 2-D velocity command toward the origin.

struct PointmassState {
  double x = 0.0;
  double y = 0.0;
  std::size_t t = 0;
};

struct PointmassStep {
  PointmassState state;
  double reward = 0.0;
  DoneReason done = DoneReason::kNone;
};

inline constexpr std::size_t kPointmassMaxSteps = 100;
inline constexpr double kPointmassGoalRadius = 0.05;

double pointmass_reward(const PointmassState& after);
PointmassStep pointmass_step(const PointmassState& state, std::span<const double> action);

// ---------------------------------------------------------------------------
// Two-joint crawler with ratchet ground contact.

struct RewardWeights {
  double distance = 1.0;
  double acceleration = 0.05;
  double roll = 0.5;
  double fold = 1.0;
  double fold_threshold = -0.3;  // rad
};

struct CrawlerState {
  double x = 0.0;
  double q[2] = {0.0, 0.0};
  double qd[2] = {0.0, 0.0};
  double last_action[2] = {0.0, 0.0};   // a_t after a step
  double prior_action[2] = {0.0, 0.0};  // a_{t-1}
  double roll = 0.0;
  std::size_t t = 0;
};

struct CrawlerRewardTerms {
  double distance = 0.0;      // x_t - x_{t-1}
  double acceleration = 0.0;  // |a_t - 2 a_{t-1} + a_{t-2}|
  double roll = 0.0;          // |roll|
  double fold = 0.0;          // sum_i max(threshold - q_i, 0)
  double total = 0.0;
};

struct CrawlerStep {
  CrawlerState state;
  CrawlerRewardTerms terms;
  double reward = 0.0;
  DoneReason done = DoneReason::kNone;
};

inline constexpr std::size_t kCrawlerMaxSteps = 500;
inline constexpr double kCrawlerDt = 0.02;
inline constexpr double kCrawlerJointLimit = 1.2;
inline constexpr double kCrawlerMaxJointSpeed = 2.0;
inline constexpr double kCrawlerFallRoll = 0.8;

double crawler_foot_reach(double q1, double q2);
CrawlerRewardTerms crawler_reward(const CrawlerState& before, const CrawlerState& after,
                                  std::span<const double> action, const RewardWeights& w);
CrawlerStep crawler_step(const CrawlerState& state, std::span<const double> action,
                         const RewardWeights& w);

// ---------------------------------------------------------------------------
// Pure observation/reward model over logged raw state vectors. The same
// functions back the live environments and the reward labeler.

class EnvModel {
 public:
  virtual ~EnvModel() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual std::vector<double> observe(std::span<const double> raw) const = 0;
  // Reward for `action` taking raw state `before` to `after`.
  virtual double reward(std::span<const double> before, std::span<const double> after,
                        std::span<const double> action) const = 0;
  // Task progress read off a raw state (crawler: x; pointmass: goal distance;
  // pendulum: |wrapped angle|).
  virtual double progress(std::span<const double> raw) const = 0;
};

std::unique_ptr<EnvModel> make_env_model(const std::string& name, const RewardWeights& w = {});

struct StepResult {
  std::vector<double> obs;
  double reward = 0.0;
  DoneReason done = DoneReason::kNone;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual StepResult step(std::span<const double> action) = 0;
  virtual std::vector<double> raw_state() const = 0;
  virtual const EnvModel& model() const = 0;
  double progress() const { return model().progress(raw_state()); }
};

// Throws std::invalid_argument for unknown names. `history` < 0 selects the
// environment's default history length.
std::unique_ptr<Environment> make_env(const std::string& name, int history = 0,
                                      const RewardWeights& w = {});
std::unique_ptr<Environment> make_base_env(const std::string& name, const RewardWeights& w = {});

// Observation augmented with the k most recent (obs, action) pairs, newest
// first, zero at episode start.
std::size_t history_dim(std::size_t obs_dim, std::size_t action_dim, std::size_t k);

class ObservationHistory {
 public:
  ObservationHistory(std::size_t obs_dim, std::size_t action_dim, std::size_t k);

  std::vector<double> reset(std::span<const double> first_obs);
  // Records (previous obs, action) and returns the wrapped next observation.
  std::vector<double> advance(std::span<const double> action, std::span<const double> next_obs);
  std::vector<double> current() const;

 private:
  std::size_t obs_dim_;
  std::size_t action_dim_;
  std::size_t k_;
  std::vector<double> obs_;
  std::deque<std::vector<double>> past_;  // (obs, action) concatenated, newest first
};

class HistoryWrapper : public Environment {
 public:
  HistoryWrapper(std::unique_ptr<Environment> inner, std::size_t k);

  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(std::span<const double> action) override;
  std::vector<double> raw_state() const override { return inner_->raw_state(); }
  const EnvModel& model() const override { return inner_->model(); }
  std::size_t history() const { return k_; }

 private:
  std::unique_ptr<Environment> inner_;
  std::size_t k_;
  EnvSpec spec_;
  ObservationHistory history_;
};

}  // namespace sacd
