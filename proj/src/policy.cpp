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

#include "sacd/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sacd {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

void check_dims(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

PolicyHead make_policy(std::size_t obs_dim, std::size_t action_dim,
                       std::span<const std::size_t> hidden, std::uint64_t seed) {
  if (action_dim == 0) throw std::invalid_argument("make_policy: action_dim must be positive");
  std::vector<std::size_t> dims{obs_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(2 * action_dim);
  PolicyHead head;
  head.net = init_network(dims, seed);
  head.action_dim = action_dim;
  return head;
}

GaussianParams policy_distribution(const PolicyHead& head, std::span<const double> obs) {
  check_dims(obs.size(), head.obs_dim(), "policy_distribution");
  for (double x : obs)
    if (!std::isfinite(x)) throw std::invalid_argument("policy_distribution: non-finite observation");
  const auto out = forward(head.net, obs);
  GaussianParams g;
  g.mean.assign(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(head.action_dim));
  g.std.resize(head.action_dim);
  for (std::size_t i = 0; i < head.action_dim; ++i) {
    g.std[i] = std::exp(std::clamp(out[head.action_dim + i], head.log_std_min, head.log_std_max));
  }
  return g;
}

double log1m_tanh_sq(double u) { return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u)); }

double log_prob(std::span<const double> mean, std::span<const double> std,
                std::span<const double> pre_squash) {
  check_dims(mean.size(), std.size(), "log_prob");
  check_dims(mean.size(), pre_squash.size(), "log_prob");
  double lp = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double z = (pre_squash[i] - mean[i]) / std[i];
    lp += -0.5 * z * z - std::log(std[i]) - kHalfLog2Pi - log1m_tanh_sq(pre_squash[i]);
  }
  return lp;
}

ActionSample sample_action(std::span<const double> mean, std::span<const double> std,
                           std::span<const double> noise) {
  check_dims(mean.size(), std.size(), "sample_action");
  check_dims(mean.size(), noise.size(), "sample_action");
  ActionSample s;
  s.noise.assign(noise.begin(), noise.end());
  s.pre_squash.resize(mean.size());
  s.action.resize(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    if (!(std[i] > 0.0)) throw std::invalid_argument("sample_action: std must be positive");
    s.pre_squash[i] = mean[i] + std[i] * noise[i];
    s.action[i] = std::tanh(s.pre_squash[i]);
  }
  s.log_prob = log_prob(mean, std, s.pre_squash);
  return s;
}

std::vector<double> deterministic_action(const PolicyHead& head, std::span<const double> obs) {
  auto g = policy_distribution(head, obs);
  for (double& m : g.mean) m = std::tanh(m);
  return g.mean;
}

PolicyBatch sample_batch(const PolicyHead& head, Matrix obs, const Matrix& noise) {
  const std::size_t n = obs.rows();
  const std::size_t da = head.action_dim;
  if (noise.rows() != n || noise.cols() != da) throw std::invalid_argument("sample_batch: noise shape mismatch");
  PolicyBatch b;
  b.cache = forward(head.net, std::move(obs));
  const Matrix& out = b.cache.output();
  b.mean = Matrix(n, da);
  b.log_std = Matrix(n, da);
  b.std = Matrix(n, da);
  b.noise = noise;
  b.pre_squash = Matrix(n, da);
  b.action = Matrix(n, da);
  b.log_prob.assign(n, 0.0);
  b.log_std_active.assign(n * da, 0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < da; ++i) {
      const double raw = out(r, da + i);
      b.mean(r, i) = out(r, i);
      b.log_std(r, i) = std::clamp(raw, head.log_std_min, head.log_std_max);
      b.log_std_active[r * da + i] = (raw > head.log_std_min && raw < head.log_std_max) ? 1 : 0;
      b.std(r, i) = std::exp(b.log_std(r, i));
      b.pre_squash(r, i) = b.mean(r, i) + b.std(r, i) * noise(r, i);
      b.action(r, i) = std::tanh(b.pre_squash(r, i));
    }
    b.log_prob[r] = log_prob(b.mean.row(r), b.std.row(r), b.pre_squash.row(r));
  }
  return b;
}

GradientBundle policy_backward(const PolicyHead& head, const PolicyBatch& batch,
                               std::span<const double> dlogp, const Matrix& daction) {
  const std::size_t n = batch.mean.rows();
  const std::size_t da = head.action_dim;
  check_dims(dlogp.size(), n, "policy_backward");
  if (!daction.same_shape(batch.action)) throw std::invalid_argument("policy_backward: daction shape mismatch");
  // With fixed noise, d logp / d u_i = 2 tanh(u_i) through the Jacobian term
  // while the Gaussian term is constant; u depends on mean and log_std.
  Matrix dout(n, 2 * da);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < da; ++i) {
      const double a = batch.action(r, i);
      const double du = dlogp[r] * 2.0 * a + daction(r, i) * (1.0 - a * a);
      dout(r, i) = du;
      if (batch.log_std_active[r * da + i]) {
        dout(r, da + i) = -dlogp[r] + du * batch.std(r, i) * batch.noise(r, i);
      }
    }
  }
  return backward(head.net, batch.cache, dout, BackwardMode::kParametersOnly);
}

}  // namespace sacd
