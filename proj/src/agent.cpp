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

#include "sacd/agent.hpp"

#include <cmath>
#include <string>

namespace sacd {
namespace {

Matrix draw_noise(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NonFiniteError(std::string("sac_update: non-finite ") + what);
}

}  // namespace

SacAgent make_agent(const TrainerConfig& config, std::size_t obs_dim, std::size_t action_dim) {
  const auto hidden = config.hidden();
  const AdamConfig adam{.learning_rate = config.learning_rate};
  SacAgent agent;
  agent.policy = make_policy(obs_dim, action_dim, hidden, derive_seed(config.seed, 1));
  agent.critics = make_critics(obs_dim, action_dim, hidden, derive_seed(config.seed, 2), config.tau);
  agent.temperature = make_temperature(
      config.resolved_target_entropy(), config.learning_rate,
      config.temperature_mode == "plain" ? TemperatureMode::kPlainGradient : TemperatureMode::kAdam,
      config.initial_log_alpha);
  agent.policy_adam = make_adam(agent.policy.net, adam);
  agent.q1_adam = make_adam(agent.critics.q1, adam);
  agent.q2_adam = make_adam(agent.critics.q2, adam);
  agent.gamma = config.gamma;
  agent.fixed_alpha = config.fixed_alpha;
  return agent;
}

UpdateStats sac_update(SacAgent& agent, const Minibatch& batch, Rng& noise_rng) {
  const std::size_t n = batch.size();
  const std::size_t da = agent.policy.action_dim;
  const Matrix next_noise = draw_noise(noise_rng, n, da);
  const Matrix policy_noise = draw_noise(noise_rng, n, da);

  UpdateStats stats;
  stats.alpha = agent.current_alpha();

  QLossResult q = q_loss_and_grads(agent.critics, agent.policy, stats.alpha, batch, agent.gamma, next_noise);
  require_finite(q.loss1, "critic 1 loss");
  require_finite(q.loss2, "critic 2 loss");
  if (!q.grad1.all_finite() || !q.grad2.all_finite()) throw NonFiniteError("sac_update: non-finite critic gradient");
  adam_step(agent.critics.q1, agent.q1_adam, q.grad1);
  adam_step(agent.critics.q2, agent.q2_adam, q.grad2);
  stats.q1_loss = q.loss1;
  stats.q2_loss = q.loss2;
  stats.q_loss = q.loss1 + q.loss2;

  PolicyLossResult p = policy_loss_and_grads(agent.critics, agent.policy, stats.alpha, batch.obs, policy_noise);
  require_finite(p.loss, "policy loss");
  if (!p.grad.all_finite()) throw NonFiniteError("sac_update: non-finite policy gradient");
  adam_step(agent.policy.net, agent.policy_adam, p.grad);
  stats.policy_loss = p.loss;

  const TemperatureLoss t = temperature_loss_and_grad(agent.temperature, p.log_prob);
  require_finite(t.grad_log_alpha, "temperature gradient");
  if (!agent.fixed_alpha) temperature_update(agent.temperature, t.grad_log_alpha);
  stats.alpha_loss = t.loss;
  stats.entropy_estimate = t.entropy_estimate;
  stats.grad_log_alpha = t.grad_log_alpha;
  stats.log_alpha_after = agent.temperature.log_alpha;

  target_update(agent.critics, agent.critics.tau);
  return stats;
}

}  // namespace sacd
