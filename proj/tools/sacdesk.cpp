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

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sacd/commands.hpp"
#include "sacd/config.hpp"
#include "sacd/critic.hpp"
#include "sacd/roles.hpp"
#include "sacd/supervisor.hpp"
#include "sacd/trainer.hpp"

namespace {

struct ConfigFlags {
  std::string config_path;
  std::string env;
  std::string target_entropy;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;
  CLI::Option* env_opt = nullptr;
  CLI::Option* entropy_opt = nullptr;
  CLI::Option* steps_opt = nullptr;
  CLI::Option* seed_opt = nullptr;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_path, "key=value config file; flags override it");
    env_opt = app->add_option("--env", env, "pendulum, pointmass or crawler");
    entropy_opt = app->add_option("--target-entropy", target_entropy, "auto or a number of nats");
    steps_opt = app->add_option("--steps", steps, "total environment steps");
    seed_opt = app->add_option("--seed", seed, "random seed");
    app->add_option("--set", overrides, "extra key=value config overrides")->take_all();
  }

  sacd::TrainerConfig resolve() const {
    sacd::TrainerConfig c;
    if (!config_path.empty()) c.load_file(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
      c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (env_opt->count()) c.set("env", env);
    if (entropy_opt->count()) c.set("target_entropy", target_entropy);
    if (steps_opt->count()) c.total_steps = steps;
    if (seed_opt->count()) c.seed = seed;
    c.validate();
    return c;
  }
};

template <typename T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::istringstream is(item);
    T v;
    if (!(is >> v) || !is.eof()) throw std::invalid_argument("cannot parse list item '" + item + "'");
    out.push_back(v);
  }
  return out;
}

// Writes to `path`, or stdout when empty.
template <typename F>
void with_output(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  write(out);
}

sacd::TrainerConfig load_role_config(const std::string& path) {
  sacd::TrainerConfig c;
  c.load_file(path);
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sacdesk: soft actor-critic with automatic temperature adjustment"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train a policy, synchronously or with the async harness");
  ConfigFlags train_flags;
  train_flags.add_to(train);
  std::string csv_out, checkpoint_dir, trace_out, mode = "sync";
  std::size_t actors = 1;
  bool lockstep = false;
  std::optional<std::uint64_t> chaos_seed;
  train->add_option("--csv-out", csv_out, "learning curve CSV");
  train->add_option("--checkpoint-dir", checkpoint_dir, "directory for latest.ckpt");
  train->add_option("--trace-out", trace_out, "per-version parameter hash trace");
  train->add_option("--mode", mode, "sync or async")->check(CLI::IsMember({"sync", "async"}));
  train->add_option("--actors", actors, "actor processes in async mode");
  train->add_flag("--lockstep", lockstep, "async with a barrier after every episode");
  train->add_option("--chaos-seed", chaos_seed, "kill and restart each subsystem once (async)");

  // eval
  auto* eval = app.add_subcommand("eval", "deterministic-policy returns of a checkpoint");
  sacd::EvalRequest eval_req;
  std::string eval_csv;
  eval->add_option("--checkpoint", eval_req.checkpoint, "checkpoint file or directory")->required();
  eval->add_option("--env", eval_req.env, "environment");
  eval->add_option("--episodes", eval_req.episodes, "evaluation episodes");
  eval->add_option("--seed", eval_req.seed, "evaluation seed");
  eval->add_option("--history", eval_req.history, "history length; -1 = environment default");
  eval->add_option("--csv-out", eval_csv, "output CSV (default stdout)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "final returns across a hyperparameter axis");
  ConfigFlags sweep_flags;
  sweep_flags.add_to(sweep);
  std::string axis, values_text, seeds_text = "0", sweep_csv;
  std::size_t window = 5;
  sweep->add_option("--axis", axis, "target-entropy or reward-scale")
      ->required()
      ->check(CLI::IsMember({"target-entropy", "reward-scale"}));
  sweep->add_option("--values", values_text, "comma-separated values")->required();
  sweep->add_option("--seeds", seeds_text, "comma-separated seeds");
  sweep->add_option("--final-window", window, "evaluation rows averaged per run");
  sweep->add_option("--csv-out", sweep_csv, "output CSV (default stdout)");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "tabular soft value iteration dumps");
  oracle->require_subcommand(1);
  std::string preset = "random", oracle_csv, targets_text, alphas_text;
  std::size_t states = 5, n_actions = 3;
  double gamma = 0.9, alpha = 1.0, tol = 1e-10;
  std::uint64_t oracle_seed = 0;
  auto add_mdp = [&](CLI::App* sub) {
    sub->add_option("--mdp", preset, "geometric, symmetric, bandit or random");
    sub->add_option("--states", states, "states of a random MDP");
    sub->add_option("--actions", n_actions, "actions of a random MDP");
    sub->add_option("--gamma", gamma, "discount");
    sub->add_option("--seed", oracle_seed, "seed of a random MDP");
    sub->add_option("--tol", tol, "tolerance");
    sub->add_option("--csv-out", oracle_csv, "output CSV (default stdout)");
  };
  auto* solve = oracle->add_subcommand("solve", "soft Q-table, values and policy");
  add_mdp(solve);
  solve->add_option("--alpha", alpha, "temperature");
  auto* calibrate = oracle->add_subcommand("calibrate", "temperature reaching each target entropy");
  add_mdp(calibrate);
  calibrate->add_option("--targets", targets_text, "comma-separated target entropies")->required();
  auto* curve = oracle->add_subcommand("curve", "expected entropy against temperature");
  add_mdp(curve);
  curve->add_option("--alphas", alphas_text, "comma-separated temperatures")->required();

  // process roles of the async harness
  std::string role_config, run_dir, role_csv, role_trace;
  std::uint32_t index = 0, incarnation = 0;
  bool role_lockstep = false;
  auto* learner = app.add_subcommand("learner", "")->group("");
  auto* labeler = app.add_subcommand("labeler", "")->group("");
  auto* actor = app.add_subcommand("actor", "")->group("");
  for (auto* sub : {learner, labeler, actor}) {
    sub->add_option("--config", role_config)->required();
    sub->add_option("--run-dir", run_dir)->required();
  }
  learner->add_option("--csv-out", role_csv);
  learner->add_option("--trace-out", role_trace);
  learner->add_flag("--lockstep", role_lockstep);
  actor->add_option("--index", index);
  actor->add_option("--incarnation", incarnation);
  actor->add_flag("--lockstep", role_lockstep);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const sacd::TrainerConfig config = train_flags.resolve();
      if (mode == "sync") {
        if (actors != 1 || lockstep || chaos_seed) throw std::invalid_argument("--actors, --lockstep and --chaos-seed need --mode async");
        sacd::RunOptions opts;
        if (!csv_out.empty()) opts.csv_out = csv_out;
        if (!checkpoint_dir.empty()) opts.checkpoint_dir = checkpoint_dir;
        if (!trace_out.empty()) opts.trace_out = trace_out;
        const auto result = sacd::train_sync(config, opts);
        std::cout << "env steps " << result.counters.env_steps << ", gradient steps " << result.counters.grad_steps
                  << ", episodes " << result.counters.episodes << ", version " << result.counters.version << "\n";
        if (!result.rows.empty()) {
          std::cout << "final eval return " << result.rows.back().eval_return_mean << ", alpha "
                    << result.rows.back().alpha << "\n";
        }
        return 0;
      }
      if (checkpoint_dir.empty()) throw std::invalid_argument("--mode async needs --checkpoint-dir");
      sacd::install_stop_handlers();
      sacd::AsyncOptions opts;
      opts.run_dir = checkpoint_dir;
      if (!csv_out.empty()) opts.csv_out = std::filesystem::absolute(csv_out);
      if (!trace_out.empty()) opts.trace_out = std::filesystem::absolute(trace_out);
      opts.actors = actors;
      opts.lockstep = lockstep;
      opts.chaos_seed = chaos_seed;
      const auto result = sacd::run_async(config, opts);
      for (const auto& e : result.events) std::cout << e << "\n";
      return result.exit_code;
    }
    if (*eval) {
      const auto stats = sacd::cmd_eval(eval_req);
      with_output(eval_csv, [&](std::ostream& out) { sacd::write_eval_csv(out, stats); });
      return 0;
    }
    if (*sweep) {
      sacd::SweepRequest req;
      req.base = sweep_flags.resolve();
      req.axis = axis;
      req.values = parse_list<double>(values_text);
      req.seeds = parse_list<std::uint64_t>(seeds_text);
      req.final_window = window;
      const auto result = sacd::cmd_sweep(req, [](const sacd::SweepRow& r) {
        std::cerr << "value " << r.value << " seed " << r.seed << ": final return " << r.final_return << "\n";
      });
      with_output(sweep_csv, [&](std::ostream& out) { sacd::write_sweep_csv(out, result); });
      std::cerr << "relative spread " << result.relative_spread << "\n";
      return 0;
    }
    if (*oracle) {
      const auto mdp = sacd::oracle_preset(preset, states, n_actions, gamma, oracle_seed);
      with_output(oracle_csv, [&](std::ostream& out) {
        if (*solve) {
          sacd::cmd_oracle_solve(out, mdp, alpha, tol);
        } else if (*calibrate) {
          const auto targets = parse_list<double>(targets_text);
          sacd::cmd_oracle_calibrate(out, mdp, targets, tol);
        } else {
          const auto alphas = parse_list<double>(alphas_text);
          sacd::cmd_oracle_curve(out, mdp, alphas);
        }
      });
      return 0;
    }
    sacd::install_stop_handlers();
    const sacd::TrainerConfig config = load_role_config(role_config);
    if (*learner) {
      sacd::LearnerOptions opts;
      opts.run_dir = run_dir;
      if (!role_csv.empty()) opts.csv_out = role_csv;
      if (!role_trace.empty()) opts.trace_out = role_trace;
      opts.lockstep = role_lockstep;
      return sacd::run_learner(config, opts);
    }
    if (*labeler) return sacd::run_labeler(config, run_dir);
    if (*actor) {
      sacd::ActorOptions opts;
      opts.run_dir = run_dir;
      opts.index = index;
      opts.incarnation = incarnation;
      opts.lockstep = role_lockstep;
      return sacd::run_actor(config, opts);
    }
  } catch (const sacd::NonFiniteError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sacd::kExitNonFinite;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
