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

#include "sacd/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "sacd/checkpoint.hpp"

namespace sacd {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

EvalStats cmd_eval(const EvalRequest& request) {
  if (request.episodes == 0) throw std::invalid_argument("eval: episodes must be positive");
  std::filesystem::path file = request.checkpoint;
  if (std::filesystem::is_directory(file)) file /= kCheckpointFile;
  if (!std::filesystem::exists(file)) throw std::invalid_argument("eval: no checkpoint at " + file.string());
  const Checkpoint ckpt = parse_checkpoint(read_file_bytes(file));

  TrainerConfig config;
  config.env = request.env;
  config.history = request.history;
  const auto env = make_env(config.env, static_cast<int>(config.resolved_history()));
  const PolicyHead& policy = ckpt.agent.policy;
  if (policy.obs_dim() != env->spec().obs_dim || policy.action_dim != env->spec().action_dim) {
    throw std::invalid_argument("eval: checkpoint policy expects observations of width " +
                                std::to_string(policy.obs_dim()) + " and " + std::to_string(policy.action_dim) +
                                " actions; " + config.env + " with history " +
                                std::to_string(config.resolved_history()) + " provides " +
                                std::to_string(env->spec().obs_dim) + " and " +
                                std::to_string(env->spec().action_dim));
  }
  return evaluate_policy(policy, config, request.episodes, request.seed);
}

void write_eval_csv(std::ostream& out, const EvalStats& s) {
  out << "episodes,return_mean,return_min,return_max,length_mean,terminal_fraction,progress_mean\n"
      << s.episodes << ',' << fmt(s.return_mean) << ',' << fmt(s.return_min) << ',' << fmt(s.return_max) << ','
      << fmt(s.length_mean) << ',' << fmt(s.terminal_fraction) << ',' << fmt(s.progress_mean) << '\n';
}

// ---------------------------------------------------------------------------

TrainerConfig sweep_config(const SweepRequest& request, double value, std::uint64_t seed) {
  TrainerConfig c = request.base;
  c.seed = seed;
  if (request.axis == "target-entropy") {
    c.target_entropy = value;
  } else if (request.axis == "reward-scale") {
    c.reward_scale = value;
    c.fixed_alpha = 1.0;
  } else {
    throw std::invalid_argument("sweep: axis must be target-entropy or reward-scale");
  }
  return c;
}

double relative_spread(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("relative_spread: need at least two values");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return (*hi - *lo) / std::abs(mean);
}

SweepResult cmd_sweep(const SweepRequest& request, const std::function<void(const SweepRow&)>& on_row) {
  if (request.values.size() < 2) throw std::invalid_argument("sweep: need at least two values");
  if (request.seeds.empty()) throw std::invalid_argument("sweep: need at least one seed");
  if (request.final_window == 0) throw std::invalid_argument("sweep: final window must be positive");
  for (double v : request.values) sweep_config(request, v, 0).validate();

  SweepResult result;
  result.axis = request.axis;
  for (double v : request.values) {
    double sum = 0.0;
    for (std::uint64_t seed : request.seeds) {
      const TrainResult run = train_sync(sweep_config(request, v, seed));
      if (run.rows.empty()) throw std::runtime_error("sweep: run produced no evaluation rows");
      const std::size_t w = std::min(request.final_window, run.rows.size());
      SweepRow row;
      row.value = v;
      row.seed = seed;
      for (std::size_t i = run.rows.size() - w; i < run.rows.size(); ++i) {
        row.final_return += run.rows[i].eval_return_mean / static_cast<double>(w);
        row.final_entropy += run.rows[i].entropy_estimate / static_cast<double>(w);
      }
      row.final_alpha = run.rows.back().alpha;
      sum += row.final_return;
      result.rows.push_back(row);
      if (on_row) on_row(row);
    }
    result.value_means.push_back(sum / static_cast<double>(request.seeds.size()));
  }
  result.relative_spread = relative_spread(result.value_means);
  return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  out << "axis,value,seed,final_return,final_entropy,final_alpha\n";
  for (const auto& row : r.rows) {
    out << r.axis << ',' << fmt(row.value) << ',' << row.seed << ',' << fmt(row.final_return) << ','
        << fmt(row.final_entropy) << ',' << fmt(row.final_alpha) << '\n';
  }
}

// ---------------------------------------------------------------------------

oracle::TabularMDP oracle_preset(const std::string& name, std::size_t states, std::size_t actions, double gamma,
                                 std::uint64_t seed) {
  oracle::TabularMDP m;
  m.gamma = gamma;
  if (name == "geometric") {
    m.states = 1;
    m.actions = 1;
    m.transition = {{1.0}};
    m.reward = Matrix(1, 1, std::vector<double>{1.0});
  } else if (name == "symmetric") {
    m.states = 1;
    m.actions = 2;
    m.transition = {{1.0}, {1.0}};
    m.reward = Matrix(1, 2, {0.0, 0.0});
  } else if (name == "bandit") {
    m.states = 1;
    m.actions = 2;
    m.transition = {{1.0}, {1.0}};
    m.reward = Matrix(1, 2, {1.0, 0.0});
  } else if (name == "random") {
    Rng rng(seed);
    return oracle::random_mdp(states, actions, gamma, rng);
  } else {
    throw std::invalid_argument("oracle: unknown MDP preset '" + name + "'");
  }
  oracle::validate(m);
  return m;
}

void cmd_oracle_solve(std::ostream& out, const oracle::TabularMDP& mdp, double alpha, double tol) {
  const auto res = oracle::soft_value_iteration(mdp, alpha, tol);
  const auto v = oracle::soft_values(res.q, alpha);
  const Matrix pi = oracle::soft_policy(res.q, alpha);
  const auto h = oracle::entropy_of(pi);
  out << "# iterations=" << res.iterations << " final_change=" << fmt(res.final_change) << "\n";
  out << "state,action,q,v,pi,entropy\n";
  for (std::size_t s = 0; s < mdp.states; ++s)
    for (std::size_t a = 0; a < mdp.actions; ++a)
      out << s << ',' << a << ',' << fmt(res.q(s, a)) << ',' << fmt(v[s]) << ',' << fmt(pi(s, a)) << ','
          << fmt(h[s]) << '\n';
}

void cmd_oracle_calibrate(std::ostream& out, const oracle::TabularMDP& mdp, std::span<const double> targets,
                          double tol) {
  out << "target_entropy,alpha,entropy,attained,entropy_low,entropy_high\n";
  for (double t : targets) {
    const auto c = oracle::calibrate_alpha(mdp, t, tol);
    out << fmt(t) << ',' << fmt(c.alpha) << ',' << fmt(c.entropy) << ',' << (c.attained ? 1 : 0) << ','
        << fmt(c.entropy_low) << ',' << fmt(c.entropy_high) << '\n';
  }
}

void cmd_oracle_curve(std::ostream& out, const oracle::TabularMDP& mdp, std::span<const double> alphas) {
  out << "alpha,expected_entropy\n";
  for (double a : alphas) out << fmt(a) << ',' << fmt(oracle::expected_entropy(mdp, a)) << '\n';
}

}  // namespace sacd
