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

#include "sacd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sacd::oracle {

void validate(const TabularMDP& mdp) {
  if (mdp.states == 0 || mdp.actions == 0) throw std::invalid_argument("mdp: empty state or action set");
  if (!(mdp.gamma >= 0.0 && mdp.gamma < 1.0)) throw std::invalid_argument("mdp: gamma must be in [0, 1)");
  if (mdp.transition.size() != mdp.states * mdp.actions) throw std::invalid_argument("mdp: transition table size");
  if (mdp.reward.rows() != mdp.states || mdp.reward.cols() != mdp.actions) {
    throw std::invalid_argument("mdp: reward table shape");
  }
  for (std::size_t i = 0; i < mdp.transition.size(); ++i) {
    const auto& row = mdp.transition[i];
    if (row.size() != mdp.states) throw std::invalid_argument("mdp: transition row size");
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw std::invalid_argument("mdp: negative transition probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw std::invalid_argument("mdp: transition row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
  for (double r : mdp.reward.values())
    if (!std::isfinite(r)) throw std::invalid_argument("mdp: non-finite reward");
}

TabularMDP random_mdp(std::size_t states, std::size_t actions, double gamma, Rng& rng) {
  TabularMDP m;
  m.states = states;
  m.actions = actions;
  m.gamma = gamma;
  m.reward = Matrix(states, actions);
  for (double& r : m.reward.values()) r = rng.uniform(-1.0, 1.0);
  m.transition.resize(states * actions);
  for (auto& row : m.transition) {
    row.resize(states);
    double sum = 0.0;
    for (double& p : row) {
      p = rng.uniform(0.0, 1.0);
      sum += p;
    }
    for (double& p : row) p /= sum;
  }
  return m;
}

double soft_max(std::span<const double> q, double alpha) {
  const double m = *std::max_element(q.begin(), q.end());
  double s = 0.0;
  for (double v : q) s += std::exp((v - m) / alpha);
  return m + alpha * std::log(s);
}

std::vector<double> soft_values(const Matrix& q, double alpha) {
  std::vector<double> v(q.rows());
  for (std::size_t s = 0; s < q.rows(); ++s) v[s] = soft_max(q.row(s), alpha);
  return v;
}

namespace {

Matrix backup_with(const TabularMDP& mdp, const std::vector<double>& v) {
  Matrix out(mdp.states, mdp.actions);
  for (std::size_t s = 0; s < mdp.states; ++s) {
    for (std::size_t a = 0; a < mdp.actions; ++a) {
      const auto& p = mdp.next(s, a);
      double ev = 0.0;
      for (std::size_t s2 = 0; s2 < mdp.states; ++s2) ev += p[s2] * v[s2];
      out(s, a) = mdp.reward(s, a) + mdp.gamma * ev;
    }
  }
  return out;
}

double sup_diff(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  return d;
}

constexpr std::size_t kMaxSweeps = 100000;

}  // namespace

Matrix soft_bellman_backup(const TabularMDP& mdp, double alpha, const Matrix& q) {
  return backup_with(mdp, soft_values(q, alpha));
}

SoftIterationResult soft_value_iteration(const TabularMDP& mdp, double alpha, double tol) {
  validate(mdp);
  if (!(alpha > 0.0)) throw std::invalid_argument("soft_value_iteration: alpha must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("soft_value_iteration: tol must be positive");
  SoftIterationResult res;
  res.q = Matrix(mdp.states, mdp.actions);
  for (std::size_t it = 1; it <= kMaxSweeps; ++it) {
    Matrix next = soft_bellman_backup(mdp, alpha, res.q);
    res.final_change = sup_diff(next, res.q);
    res.q = std::move(next);
    res.iterations = it;
    if (res.final_change < tol) return res;
  }
  throw std::runtime_error("soft_value_iteration: no convergence after 100000 sweeps (change " +
                           std::to_string(res.final_change) + ")");
}

Matrix hard_value_iteration(const TabularMDP& mdp, double tol) {
  validate(mdp);
  Matrix q(mdp.states, mdp.actions);
  for (std::size_t it = 0; it < kMaxSweeps; ++it) {
    std::vector<double> v(mdp.states);
    for (std::size_t s = 0; s < mdp.states; ++s) v[s] = *std::max_element(q.row(s).begin(), q.row(s).end());
    Matrix next = backup_with(mdp, v);
    const double change = sup_diff(next, q);
    q = std::move(next);
    if (change < tol) return q;
  }
  throw std::runtime_error("hard_value_iteration: no convergence after 100000 sweeps");
}

Matrix soft_policy(const Matrix& q, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("soft_policy: alpha must be positive");
  Matrix pi(q.rows(), q.cols());
  for (std::size_t s = 0; s < q.rows(); ++s) {
    const auto row = q.row(s);
    const double m = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t a = 0; a < q.cols(); ++a) {
      pi(s, a) = std::exp((row[a] - m) / alpha);
      z += pi(s, a);
    }
    for (std::size_t a = 0; a < q.cols(); ++a) pi(s, a) /= z;
  }
  return pi;
}

std::vector<double> entropy_of(const Matrix& policy) {
  std::vector<double> h(policy.rows(), 0.0);
  for (std::size_t s = 0; s < policy.rows(); ++s)
    for (double p : policy.row(s))
      if (p > 0.0) h[s] -= p * std::log(p);
  return h;
}

std::vector<double> stationary_distribution(const TabularMDP& mdp, const Matrix& policy) {
  const std::size_t n = mdp.states;
  std::vector<double> d(n, 1.0 / static_cast<double>(n));
  for (std::size_t it = 0; it < kMaxSweeps; ++it) {
    std::vector<double> next(n, 0.0);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t a = 0; a < mdp.actions; ++a) {
        const double w = d[s] * policy(s, a);
        if (w == 0.0) continue;
        const auto& p = mdp.next(s, a);
        for (std::size_t s2 = 0; s2 < n; ++s2) next[s2] += w * p[s2];
      }
    double change = 0.0;
    for (std::size_t s = 0; s < n; ++s) change = std::max(change, std::abs(next[s] - d[s]));
    d = std::move(next);
    if (change < 1e-10) break;
  }
  return d;
}

double expected_entropy(const TabularMDP& mdp, double alpha, double tol) {
  const auto q = soft_value_iteration(mdp, alpha, tol).q;
  const Matrix pi = soft_policy(q, alpha);
  const auto h = entropy_of(pi);
  const auto d = stationary_distribution(mdp, pi);
  double e = 0.0;
  for (std::size_t s = 0; s < mdp.states; ++s) e += d[s] * h[s];
  return e;
}

Calibration calibrate_alpha(const TabularMDP& mdp, double target_entropy, double tol) {
  validate(mdp);
  if (!(tol > 0.0)) throw std::invalid_argument("calibrate_alpha: tol must be positive");
  // Tolerance for the inner value iteration scales with alpha so large
  // temperatures do not demand sub-ulp changes.
  auto entropy_at = [&](double alpha) { return expected_entropy(mdp, alpha, std::max(1e-10, 1e-12 * alpha)); };
  Calibration c;
  c.entropy_low = entropy_at(kAlphaMin);
  c.entropy_high = entropy_at(kAlphaMax);
  if (target_entropy < c.entropy_low - tol || target_entropy > c.entropy_high + tol) {
    c.attained = false;
    c.alpha = target_entropy < c.entropy_low ? kAlphaMin : kAlphaMax;
    c.entropy = target_entropy < c.entropy_low ? c.entropy_low : c.entropy_high;
    return c;
  }
  double lo = std::log(kAlphaMin);
  double hi = std::log(kAlphaMax);
  for (std::size_t it = 1; it <= 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double h = entropy_at(std::exp(mid));
    c.iterations = it;
    c.alpha = std::exp(mid);
    c.entropy = h;
    if (std::abs(h - target_entropy) <= tol) {
      c.attained = true;
      return c;
    }
    if (h < target_entropy) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  c.attained = std::abs(c.entropy - target_entropy) <= tol;
  return c;
}

}  // namespace sacd::oracle
