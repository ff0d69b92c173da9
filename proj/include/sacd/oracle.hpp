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

#include <cstddef>
#include <vector>

#include "sacd/matrix.hpp"
#include "sacd/rng.hpp"

namespace sacd::oracle {

// Finite MDP. transition[s * A + a] is the next-state distribution.
struct TabularMDP {
  std::size_t states = 0;
  std::size_t actions = 0;
  std::vector<std::vector<double>> transition;
  Matrix reward;  // states x actions
  double gamma = 0.9;

  const std::vector<double>& next(std::size_t s, std::size_t a) const { return transition[s * actions + a]; }
};

// Throws std::invalid_argument unless rows are stochastic to 1e-12, rewards
// finite, and gamma in [0, 1).
void validate(const TabularMDP& mdp);

TabularMDP random_mdp(std::size_t states, std::size_t actions, double gamma, Rng& rng);

// alpha * log sum_a exp(q / alpha), max-shifted.
double soft_max(std::span<const double> q, double alpha);

// One application of Q <- R + gamma * P V, V(s) = alpha * logsumexp(Q(s, .) / alpha).
Matrix soft_bellman_backup(const TabularMDP& mdp, double alpha, const Matrix& q);
std::vector<double> soft_values(const Matrix& q, double alpha);

struct SoftIterationResult {
  Matrix q;
  std::size_t iterations = 0;
  double final_change = 0.0;
};

// Iterates the soft backup from Q = 0 until the sup-norm change drops below
// `tol`. Throws std::runtime_error after 1e5 sweeps.
SoftIterationResult soft_value_iteration(const TabularMDP& mdp, double alpha, double tol);

// Standard (hard max) value iteration, for the alpha -> 0 comparison.
Matrix hard_value_iteration(const TabularMDP& mdp, double tol);

// pi(a|s) proportional to exp(Q(s, a) / alpha).
Matrix soft_policy(const Matrix& q, double alpha);

std::vector<double> entropy_of(const Matrix& policy);

// Stationary state distribution of the chain induced by `policy`, by power
// iteration from uniform to 1e-10.
std::vector<double> stationary_distribution(const TabularMDP& mdp, const Matrix& policy);

// Stationary-weighted mean entropy of the soft-optimal policy at `alpha`.
double expected_entropy(const TabularMDP& mdp, double alpha, double tol = 1e-10);

struct Calibration {
  bool attained = false;
  double alpha = 0.0;
  double entropy = 0.0;
  std::size_t iterations = 0;
  // Entropy range reachable over alpha in [1e-6, 1e6].
  double entropy_low = 0.0;
  double entropy_high = 0.0;
};

inline constexpr double kAlphaMin = 1e-6;
inline constexpr double kAlphaMax = 1e6;

// Bisection in log alpha for the temperature whose soft-optimal policy has
// stationary mean entropy `target_entropy` (within `tol`). Reports
// attained = false when the target lies outside the reachable range.
Calibration calibrate_alpha(const TabularMDP& mdp, double target_entropy, double tol);

}  // namespace sacd::oracle
