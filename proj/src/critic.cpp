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

#include "sacd/critic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sacd {

CriticPair make_critics(std::size_t obs_dim, std::size_t action_dim,
                        std::span<const std::size_t> hidden, std::uint64_t seed, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("make_critics: tau must be in (0, 1]");
  std::vector<std::size_t> dims{obs_dim + action_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  CriticPair c;
  c.q1 = init_network(dims, seed);
  c.q2 = init_network(dims, seed + 1);
  c.target1 = c.q1;
  c.target2 = c.q2;
  c.tau = tau;
  return c;
}

Matrix concat_columns(const Matrix& left, const Matrix& right) {
  if (left.rows() != right.rows()) throw std::invalid_argument("concat_columns: row mismatch");
  Matrix out(left.rows(), left.cols() + right.cols());
  for (std::size_t r = 0; r < left.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(left.row(r).begin(), left.row(r).end(), dst.begin());
    std::copy(right.row(r).begin(), right.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(left.cols()));
  }
  return out;
}

double q_value(const NetworkParams& q, std::span<const double> obs, std::span<const double> action) {
  std::vector<double> in(obs.begin(), obs.end());
  in.insert(in.end(), action.begin(), action.end());
  return forward(q, in)[0];
}

double soft_state_value(const CriticPair& critics, const PolicyHead& policy, double alpha,
                        std::span<const double> obs, std::span<const double> noise) {
  const auto g = policy_distribution(policy, obs);
  const auto s = sample_action(g.mean, g.std, noise);
  const double q = std::min(q_value(critics.target1, obs, s.action), q_value(critics.target2, obs, s.action));
  return q - alpha * s.log_prob;
}

QLossResult q_loss_and_grads(const CriticPair& critics, const PolicyHead& policy, double alpha,
                             const Minibatch& batch, double gamma, const Matrix& next_noise) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("q_loss: gamma must be in [0, 1)");
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("q_loss: empty batch");

  const PolicyBatch next = sample_batch(policy, batch.next_obs, next_noise);
  const Matrix next_in = concat_columns(batch.next_obs, next.action);
  const Matrix tq1 = forward(critics.target1, next_in).output();
  const Matrix tq2 = forward(critics.target2, next_in).output();

  QLossResult res;
  res.targets.resize(n);
  for (std::size_t b = 0; b < n; ++b) {
    const double v = std::min(tq1(b, 0), tq2(b, 0)) - alpha * next.log_prob[b];
    const double y = batch.reward[b] + gamma * (batch.done[b] ? 0.0 : 1.0) * v;
    if (!std::isfinite(y)) {
      std::ostringstream msg;
      msg << "q_loss: non-finite bootstrap target at batch row " << b << " (reward=" << batch.reward[b]
          << ", min target Q=" << std::min(tq1(b, 0), tq2(b, 0)) << ", log_prob=" << next.log_prob[b]
          << ", alpha=" << alpha << ")";
      throw NonFiniteError(msg.str());
    }
    res.targets[b] = y;
  }

  const Matrix in = concat_columns(batch.obs, batch.action);
  auto regress = [&](const NetworkParams& q, double& loss, GradientBundle& grad) {
    const ForwardCache cache = forward(q, in);
    Matrix dq(n, 1);
    double acc = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      const double err = cache.output()(b, 0) - res.targets[b];
      acc += err * err;
      dq(b, 0) = 2.0 * err / static_cast<double>(n);
    }
    loss = acc / static_cast<double>(n);
    grad = backward(q, cache, dq, BackwardMode::kParametersOnly);
  };
  regress(critics.q1, res.loss1, res.grad1);
  regress(critics.q2, res.loss2, res.grad2);
  return res;
}

PolicyLossResult policy_loss_and_grads(const CriticPair& critics, const PolicyHead& policy,
                                       double alpha, const Matrix& obs, const Matrix& noise) {
  const std::size_t n = obs.rows();
  if (n == 0) throw std::invalid_argument("policy_loss: empty batch");
  const std::size_t da = policy.action_dim;
  const PolicyBatch pb = sample_batch(policy, obs, noise);
  const Matrix in = concat_columns(obs, pb.action);
  const ForwardCache c1 = forward(critics.q1, in);
  const ForwardCache c2 = forward(critics.q2, in);

  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix dq1(n, 1);
  Matrix dq2(n, 1);
  double acc = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    const double q1 = c1.output()(b, 0);
    const double q2 = c2.output()(b, 0);
    // Ties route the gradient to the first critic.
    if (q1 <= q2) {
      dq1(b, 0) = -inv_n;
    } else {
      dq2(b, 0) = -inv_n;
    }
    acc += alpha * pb.log_prob[b] - std::min(q1, q2);
  }
  const GradientBundle g1 = backward(critics.q1, c1, dq1, BackwardMode::kInputOnly);
  const GradientBundle g2 = backward(critics.q2, c2, dq2, BackwardMode::kInputOnly);

  const std::size_t obs_dim = obs.cols();
  Matrix daction(n, da);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t i = 0; i < da; ++i) daction(b, i) = g1.input(b, obs_dim + i) + g2.input(b, obs_dim + i);
  const std::vector<double> dlogp(n, alpha * inv_n);

  PolicyLossResult res;
  res.loss = acc * inv_n;
  if (!std::isfinite(res.loss)) throw NonFiniteError("policy_loss: non-finite loss");
  res.grad = policy_backward(policy, pb, dlogp, daction);
  res.log_prob = pb.log_prob;
  return res;
}

void target_update(CriticPair& critics, double tau) {
  polyak_average(critics.target1, critics.q1, tau);
  polyak_average(critics.target2, critics.q2, tau);
}

}  // namespace sacd
