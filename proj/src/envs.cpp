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

#include "sacd/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sacd/rng.hpp"

namespace sacd {
namespace {

double clip_action(double a) {
  if (!std::isfinite(a)) throw std::invalid_argument("environment: non-finite action");
  return std::clamp(a, -1.0, 1.0);
}

void expect_size(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(n) + " values, got " +
                                std::to_string(v.size()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Pendulum

namespace {
constexpr double kGravity = 10.0;
constexpr double kMass = 1.0;
constexpr double kLength = 1.0;
constexpr double kPendulumDt = 0.05;
constexpr double kMaxSpeed = 8.0;
constexpr double kMaxTorque = 2.0;
}  // namespace

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(theta + std::numbers::pi, two_pi);
  if (r < 0.0) r += two_pi;
  return r - std::numbers::pi;
}

double pendulum_reward(const PendulumState& before, double action) {
  const double u = kMaxTorque * clip_action(action);
  const double th = wrap_angle(before.theta);
  return -(th * th + 0.1 * before.theta_dot * before.theta_dot + 0.001 * u * u);
}

PendulumStep pendulum_step(const PendulumState& s, double action) {
  const double u = kMaxTorque * clip_action(action);
  const double accel = 3.0 * kGravity / (2.0 * kLength) * std::sin(s.theta) + 3.0 * u / (kMass * kLength * kLength);
  PendulumStep out;
  out.state.theta_dot = std::clamp(s.theta_dot + accel * kPendulumDt, -kMaxSpeed, kMaxSpeed);
  out.state.theta = s.theta + out.state.theta_dot * kPendulumDt;
  out.state.t = s.t + 1;
  out.reward = pendulum_reward(s, action);
  out.done = out.state.t >= kPendulumMaxSteps ? DoneReason::kTimeLimit : DoneReason::kNone;
  return out;
}

// ---------------------------------------------------------------------------
// Point mass

double pointmass_reward(const PointmassState& after) { return -std::hypot(after.x, after.y); }

PointmassStep pointmass_step(const PointmassState& s, std::span<const double> action) {
  expect_size(action, 2, "pointmass_step");
  PointmassStep out;
  out.state.x = s.x + 0.05 * clip_action(action[0]);
  out.state.y = s.y + 0.05 * clip_action(action[1]);
  out.state.t = s.t + 1;
  out.reward = pointmass_reward(out.state);
  if (std::hypot(out.state.x, out.state.y) < kPointmassGoalRadius) {
    out.done = DoneReason::kTerminal;
  } else if (out.state.t >= kPointmassMaxSteps) {
    out.done = DoneReason::kTimeLimit;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Crawler

double crawler_foot_reach(double q1, double q2) { return 0.5 * std::cos(q1) + 0.5 * std::cos(q1 + q2); }

CrawlerRewardTerms crawler_reward(const CrawlerState& before, const CrawlerState& after,
                                  std::span<const double> action, const RewardWeights& w) {
  expect_size(action, 2, "crawler_reward");
  CrawlerRewardTerms r;
  r.distance = after.x - before.x;
  double acc_sq = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double d2 = clip_action(action[i]) - 2.0 * before.last_action[i] + before.prior_action[i];
    acc_sq += d2 * d2;
  }
  r.acceleration = std::sqrt(acc_sq);
  r.roll = std::abs(after.roll);
  r.fold = std::max(w.fold_threshold - after.q[0], 0.0) + std::max(w.fold_threshold - after.q[1], 0.0);
  r.total = w.distance * r.distance - w.acceleration * r.acceleration - w.roll * r.roll - w.fold * r.fold;
  return r;
}

CrawlerStep crawler_step(const CrawlerState& s, std::span<const double> action, const RewardWeights& w) {
  expect_size(action, 2, "crawler_step");
  const double a[2] = {clip_action(action[0]), clip_action(action[1])};
  CrawlerStep out;
  CrawlerState& n = out.state;
  for (int i = 0; i < 2; ++i) {
    const double v = kCrawlerMaxJointSpeed * a[i];
    n.q[i] = std::clamp(s.q[i] + v * kCrawlerDt, -kCrawlerJointLimit, kCrawlerJointLimit);
    n.qd[i] = (n.q[i] - s.q[i]) / kCrawlerDt;
    n.last_action[i] = a[i];
    n.prior_action[i] = s.last_action[i];
  }
  // Ratchet contact: a backward foot stroke pushes the body forward, a
  // forward stroke slips.
  const double reach_change = crawler_foot_reach(n.q[0], n.q[1]) - crawler_foot_reach(s.q[0], s.q[1]);
  n.x = s.x + std::max(0.0, -reach_change);
  n.roll = 0.3 * (n.q[0] - n.q[1]);
  n.t = s.t + 1;
  out.terms = crawler_reward(s, n, action, w);
  out.reward = out.terms.total;
  if (std::abs(n.roll) > kCrawlerFallRoll) {
    out.done = DoneReason::kTerminal;
  } else if (n.t >= kCrawlerMaxSteps) {
    out.done = DoneReason::kTimeLimit;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Raw-state codecs and models

namespace {

std::vector<double> encode(const PendulumState& s) { return {s.theta, s.theta_dot}; }
PendulumState decode_pendulum(std::span<const double> raw) {
  expect_size(raw, 2, "pendulum raw state");
  return {raw[0], raw[1], 0};
}

std::vector<double> encode(const PointmassState& s) { return {s.x, s.y}; }
PointmassState decode_pointmass(std::span<const double> raw) {
  expect_size(raw, 2, "pointmass raw state");
  return {raw[0], raw[1], 0};
}

std::vector<double> encode(const CrawlerState& s) {
  return {s.x, s.q[0], s.q[1], s.qd[0], s.qd[1], s.last_action[0], s.last_action[1],
          s.prior_action[0], s.prior_action[1], s.roll};
}
CrawlerState decode_crawler(std::span<const double> raw) {
  expect_size(raw, 10, "crawler raw state");
  CrawlerState s;
  s.x = raw[0];
  s.q[0] = raw[1];
  s.q[1] = raw[2];
  s.qd[0] = raw[3];
  s.qd[1] = raw[4];
  s.last_action[0] = raw[5];
  s.last_action[1] = raw[6];
  s.prior_action[0] = raw[7];
  s.prior_action[1] = raw[8];
  s.roll = raw[9];
  return s;
}

class PendulumModel final : public EnvModel {
 public:
  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> observe(std::span<const double> raw) const override {
    const auto s = decode_pendulum(raw);
    return {std::cos(s.theta), std::sin(s.theta), s.theta_dot};
  }
  double reward(std::span<const double> before, std::span<const double>,
                std::span<const double> action) const override {
    expect_size(action, 1, "pendulum action");
    return pendulum_reward(decode_pendulum(before), action[0]);
  }
  double progress(std::span<const double> raw) const override {
    return std::abs(wrap_angle(decode_pendulum(raw).theta));
  }

 private:
  EnvSpec spec_{"pendulum", 3, 1, 2, kPendulumMaxSteps, kPendulumDt, 0};
};

class PointmassModel final : public EnvModel {
 public:
  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> observe(std::span<const double> raw) const override {
    const auto s = decode_pointmass(raw);
    return {s.x, s.y};
  }
  double reward(std::span<const double>, std::span<const double> after,
                std::span<const double>) const override {
    return pointmass_reward(decode_pointmass(after));
  }
  double progress(std::span<const double> raw) const override {
    const auto s = decode_pointmass(raw);
    return std::hypot(s.x, s.y);
  }

 private:
  EnvSpec spec_{"pointmass", 2, 2, 2, kPointmassMaxSteps, 0.05, 0};
};

class CrawlerModel final : public EnvModel {
 public:
  explicit CrawlerModel(const RewardWeights& w) : weights_(w) {
    if (w.distance < 0 || w.acceleration < 0 || w.roll < 0 || w.fold < 0) {
      throw std::invalid_argument("crawler: reward weights must be non-negative");
    }
  }
  const EnvSpec& spec() const override { return spec_; }
  std::vector<double> observe(std::span<const double> raw) const override {
    const auto s = decode_crawler(raw);
    return {s.q[0], s.q[1], s.qd[0], s.qd[1], s.roll};
  }
  double reward(std::span<const double> before, std::span<const double> after,
                std::span<const double> action) const override {
    return crawler_reward(decode_crawler(before), decode_crawler(after), action, weights_).total;
  }
  double progress(std::span<const double> raw) const override { return decode_crawler(raw).x; }
  const RewardWeights& weights() const { return weights_; }

 private:
  RewardWeights weights_;
  EnvSpec spec_{"crawler", 5, 2, 10, kCrawlerMaxSteps, kCrawlerDt, 5};
};

// ---------------------------------------------------------------------------
// Live environments

class PendulumEnv final : public Environment {
 public:
  const EnvSpec& spec() const override { return model_.spec(); }
  std::vector<double> reset(std::uint64_t seed) override {
    Rng rng(seed);
    state_ = {};
    state_.theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
    state_.theta_dot = rng.uniform(-1.0, 1.0);
    return model_.observe(encode(state_));
  }
  StepResult step(std::span<const double> action) override {
    expect_size(action, 1, "pendulum action");
    const auto r = pendulum_step(state_, action[0]);
    state_ = r.state;
    return {model_.observe(encode(state_)), r.reward, r.done};
  }
  std::vector<double> raw_state() const override { return encode(state_); }
  const EnvModel& model() const override { return model_; }

 private:
  PendulumModel model_;
  PendulumState state_;
};

class PointmassEnv final : public Environment {
 public:
  const EnvSpec& spec() const override { return model_.spec(); }
  std::vector<double> reset(std::uint64_t seed) override {
    Rng rng(seed);
    state_ = {};
    state_.x = rng.uniform(-1.0, 1.0);
    state_.y = rng.uniform(-1.0, 1.0);
    return model_.observe(encode(state_));
  }
  StepResult step(std::span<const double> action) override {
    const auto r = pointmass_step(state_, action);
    state_ = r.state;
    return {model_.observe(encode(state_)), r.reward, r.done};
  }
  std::vector<double> raw_state() const override { return encode(state_); }
  const EnvModel& model() const override { return model_; }

 private:
  PointmassModel model_;
  PointmassState state_;
};

class CrawlerEnv final : public Environment {
 public:
  explicit CrawlerEnv(const RewardWeights& w) : model_(w) {}
  const EnvSpec& spec() const override { return model_.spec(); }
  std::vector<double> reset(std::uint64_t) override {
    state_ = {};
    return model_.observe(encode(state_));
  }
  StepResult step(std::span<const double> action) override {
    const auto r = crawler_step(state_, action, model_.weights());
    state_ = r.state;
    return {model_.observe(encode(state_)), r.reward, r.done};
  }
  std::vector<double> raw_state() const override { return encode(state_); }
  const EnvModel& model() const override { return model_; }

 private:
  CrawlerModel model_;
  CrawlerState state_;
};

}  // namespace

std::unique_ptr<EnvModel> make_env_model(const std::string& name, const RewardWeights& w) {
  if (name == "pendulum") return std::make_unique<PendulumModel>();
  if (name == "pointmass") return std::make_unique<PointmassModel>();
  if (name == "crawler") return std::make_unique<CrawlerModel>(w);
  throw std::invalid_argument("unknown environment '" + name + "' (expected pendulum, pointmass or crawler)");
}

std::unique_ptr<Environment> make_base_env(const std::string& name, const RewardWeights& w) {
  if (name == "pendulum") return std::make_unique<PendulumEnv>();
  if (name == "pointmass") return std::make_unique<PointmassEnv>();
  if (name == "crawler") return std::make_unique<CrawlerEnv>(w);
  throw std::invalid_argument("unknown environment '" + name + "' (expected pendulum, pointmass or crawler)");
}

std::unique_ptr<Environment> make_env(const std::string& name, int history, const RewardWeights& w) {
  auto base = make_base_env(name, w);
  const std::size_t k = history < 0 ? base->spec().default_history : static_cast<std::size_t>(history);
  return std::make_unique<HistoryWrapper>(std::move(base), k);
}

// ---------------------------------------------------------------------------
// History augmentation

std::size_t history_dim(std::size_t obs_dim, std::size_t action_dim, std::size_t k) {
  return obs_dim + k * (obs_dim + action_dim);
}

ObservationHistory::ObservationHistory(std::size_t obs_dim, std::size_t action_dim, std::size_t k)
    : obs_dim_(obs_dim), action_dim_(action_dim), k_(k) {}

std::vector<double> ObservationHistory::reset(std::span<const double> first_obs) {
  expect_size(first_obs, obs_dim_, "history reset");
  obs_.assign(first_obs.begin(), first_obs.end());
  past_.assign(k_, std::vector<double>(obs_dim_ + action_dim_, 0.0));
  return current();
}

std::vector<double> ObservationHistory::advance(std::span<const double> action,
                                                std::span<const double> next_obs) {
  expect_size(action, action_dim_, "history action");
  expect_size(next_obs, obs_dim_, "history observation");
  if (k_ > 0) {
    std::vector<double> pair(obs_);
    pair.insert(pair.end(), action.begin(), action.end());
    past_.push_front(std::move(pair));
    past_.pop_back();
  }
  obs_.assign(next_obs.begin(), next_obs.end());
  return current();
}

std::vector<double> ObservationHistory::current() const {
  std::vector<double> out(obs_);
  out.reserve(history_dim(obs_dim_, action_dim_, k_));
  for (const auto& p : past_) out.insert(out.end(), p.begin(), p.end());
  return out;
}

HistoryWrapper::HistoryWrapper(std::unique_ptr<Environment> inner, std::size_t k)
    : inner_(std::move(inner)),
      k_(k),
      spec_(inner_->spec()),
      history_(inner_->spec().obs_dim, inner_->spec().action_dim, k) {
  spec_.obs_dim = history_dim(spec_.obs_dim, spec_.action_dim, k);
}

std::vector<double> HistoryWrapper::reset(std::uint64_t seed) { return history_.reset(inner_->reset(seed)); }

StepResult HistoryWrapper::step(std::span<const double> action) {
  StepResult r = inner_->step(action);
  // The history stores the action as the environment applied it.
  std::vector<double> applied(action.begin(), action.end());
  for (double& a : applied) a = clip_action(a);
  r.obs = history_.advance(applied, r.obs);
  return r;
}

}  // namespace sacd
