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

#include "sacd/trainer.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sacd {
namespace {

std::unique_ptr<Environment> env_for(const TrainerConfig& config) {
  return make_env(config.env, static_cast<int>(config.resolved_history()));
}

std::uint64_t next_multiple(std::uint64_t value, std::uint64_t interval) { return (value / interval + 1) * interval; }

EvalStats summarize(std::vector<double> returns, double length_sum, std::size_t terminal, double progress_sum) {
  EvalStats s;
  s.episodes = returns.size();
  if (returns.empty()) return s;
  const double n = static_cast<double>(returns.size());
  double sum = 0.0;
  for (double r : returns) sum += r;
  s.return_mean = sum / n;
  s.return_min = *std::min_element(returns.begin(), returns.end());
  s.return_max = *std::max_element(returns.begin(), returns.end());
  s.length_mean = length_sum / n;
  s.terminal_fraction = static_cast<double>(terminal) / n;
  s.progress_mean = progress_sum / n;
  s.returns = std::move(returns);
  return s;
}

template <typename ChooseAction>
EvalStats rollouts(const TrainerConfig& config, std::size_t episodes, std::uint64_t seed, ChooseAction choose) {
  std::vector<double> returns;
  double length_sum = 0.0, progress_sum = 0.0;
  std::size_t terminal = 0;
  auto env = env_for(config);
  for (std::size_t i = 0; i < episodes; ++i) {
    std::vector<double> obs = env->reset(derive_seed(seed, i));
    double ret = 0.0;
    std::size_t len = 0;
    for (;;) {
      const std::vector<double> a = choose(obs);
      StepResult r = env->step(a);
      ret += r.reward;
      ++len;
      obs = std::move(r.obs);
      if (r.done != DoneReason::kNone) {
        if (r.done == DoneReason::kTerminal) ++terminal;
        break;
      }
    }
    returns.push_back(ret);
    length_sum += static_cast<double>(len);
    progress_sum += env->progress();
  }
  return summarize(std::move(returns), length_sum, terminal, progress_sum);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

EvalStats evaluate_policy(const PolicyHead& policy, const TrainerConfig& config, std::size_t episodes,
                          std::uint64_t seed) {
  if (episodes == 0) throw std::invalid_argument("evaluate: episodes must be positive");
  return rollouts(config, episodes, seed,
                  [&](const std::vector<double>& obs) { return deterministic_action(policy, obs); });
}

EvalStats evaluate_random(const TrainerConfig& config, std::size_t episodes, std::uint64_t seed) {
  if (episodes == 0) throw std::invalid_argument("evaluate: episodes must be positive");
  Rng rng(derive_seed(seed, 0xa11));
  const std::size_t da = make_env_model(config.env)->spec().action_dim;
  return rollouts(config, episodes, seed, [&](const std::vector<double>&) {
    std::vector<double> a(da);
    for (double& v : a) v = rng.uniform(-1.0, 1.0);
    return a;
  });
}

// ---------------------------------------------------------------------------

std::uint64_t actor_seed(const TrainerConfig& config, std::uint64_t actor_index, std::uint64_t incarnation) {
  const std::uint64_t base = derive_seed(config.seed, 1000 + actor_index);
  return incarnation == 0 ? base : derive_seed(base, incarnation);
}

Actor::Actor(const TrainerConfig& config, std::uint64_t actor_index, std::uint64_t incarnation,
             std::uint64_t epoch)
    : config_(config),
      env_(env_for(config)),
      rng_(actor_seed(config, actor_index, incarnation)),
      incarnation_(incarnation),
      epoch_(epoch) {}

void Actor::load_policy(const PolicyHead& policy, std::uint64_t version, std::uint64_t env_steps,
                        std::uint64_t episodes) {
  if (policy.obs_dim() != env_->spec().obs_dim || policy.action_dim != env_->spec().action_dim) {
    throw std::invalid_argument("actor: policy shape does not match environment " + config_.env);
  }
  if (loaded_ && version < version_) {
    throw std::invalid_argument("actor: refusing to load version " + std::to_string(version) +
                                " over " + std::to_string(version_));
  }
  policy_ = policy;
  version_ = version;
  base_steps_ = env_steps;
  base_episodes_ = episodes;
  steps_since_load_ = 0;
  episodes_since_load_ = 0;
  loaded_ = true;
}

Episode Actor::run_episode() {
  if (!loaded_) throw std::logic_error("actor: no policy loaded");
  const std::size_t da = env_->spec().action_dim;
  Episode ep;
  ep.id = (incarnation_ << 32) | (local_episodes_ & 0xffffffffULL);
  std::vector<double> obs = env_->reset(rng_.next_u64());
  std::vector<double> raw = env_->raw_state();
  const bool smooth = base_episodes_ + episodes_since_load_ < config_.action_smoothing_episodes;
  std::vector<double> prev(da, 0.0);
  for (std::uint64_t t = 0;; ++t) {
    std::vector<double> a(da);
    if (base_steps_ + steps_since_load_ < config_.initial_random_steps) {
      for (double& v : a) v = rng_.uniform(-1.0, 1.0);
    } else {
      const GaussianParams g = policy_distribution(policy_, obs);
      std::vector<double> noise(da);
      for (double& v : noise) v = rng_.normal();
      a = sample_action(g.mean, g.std, noise).action;
    }
    if (smooth) {
      for (std::size_t i = 0; i < da; ++i) a[i] = config_.action_smoothing * prev[i] + (1.0 - config_.action_smoothing) * a[i];
      prev = a;
    }
    StepResult r = env_->step(a);
    std::vector<double> after = env_->raw_state();
    const std::uint64_t stamp = epoch_ + clock_;
    StepRecord rec;
    rec.step = t;
    rec.timestamp = stamp;
    rec.done = r.done;
    rec.raw = after;
    rec.action = a;
    if (t == 0) rec.initial = raw;
    ep.records.push_back(std::move(rec));

    Transition tr;
    tr.obs = std::move(obs);
    tr.action = std::move(a);
    tr.reward = r.reward;
    tr.next_obs = r.obs;
    tr.done = r.done == DoneReason::kTerminal;
    tr.episode_end = r.done != DoneReason::kNone;
    tr.timestamp = stamp;
    ep.transitions.push_back(std::move(tr));
    ep.episode_return += r.reward;

    ++clock_;
    ++steps_since_load_;
    obs = std::move(r.obs);
    raw = std::move(after);
    if (r.done != DoneReason::kNone) break;
  }
  ++episodes_since_load_;
  ++local_episodes_;
  return ep;
}

// ---------------------------------------------------------------------------

std::string config_comment_block(const TrainerConfig& config) {
  std::ostringstream o;
  o << "# resolved config\n";
  std::istringstream lines(config.to_text());
  std::string line;
  while (std::getline(lines, line)) o << "# " << line << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "# config_hash=%016" PRIx64 "\n", config.hash());
  o << buf;
  return o.str();
}

std::string format_csv_row(const CsvRow& r) {
  std::ostringstream o;
  o << r.step << ',' << r.episodes << ',' << fmt(r.eval_return_mean) << ',' << fmt(r.eval_return_min) << ','
    << fmt(r.eval_return_max) << ',' << fmt(r.entropy_estimate) << ',' << fmt(r.alpha) << ',' << fmt(r.q_loss)
    << ',' << fmt(r.policy_loss) << ',' << fmt(r.alpha_loss);
  return o.str();
}

CsvLog::CsvLog(const std::filesystem::path& path, const TrainerConfig& config) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot write CSV " + path.string());
  out_ << config_comment_block(config) << kCsvHeader << "\n";
  out_.flush();
}

CsvLog CsvLog::append(const std::filesystem::path& path) {
  CsvLog log;
  log.out_.open(path, std::ios::app);
  if (!log.out_) throw std::runtime_error("cannot append to CSV " + path.string());
  return log;
}

void CsvLog::write(const CsvRow& row) {
  out_ << format_csv_row(row) << "\n";
  out_.flush();
}

// ---------------------------------------------------------------------------

Learner::Learner(const TrainerConfig& config)
    : config_(config),
      config_hash_(config.hash()),
      agent_(make_agent(config, env_for(config)->spec().obs_dim, env_for(config)->spec().action_dim)),
      buffer_(config.buffer_capacity, agent_.policy.obs_dim(), agent_.policy.action_dim),
      sample_rng_(derive_seed(config.seed, 3)),
      noise_rng_(derive_seed(config.seed, 4)) {
  config_.validate();
  counters_.next_eval_step = config.eval_interval;
  counters_.next_publish_step = config.checkpoint_interval;
}

Learner::Learner(const TrainerConfig& config, const Checkpoint& restore) : Learner(config) {
  if (restore.config_hash != config_hash_) {
    throw std::invalid_argument("learner: checkpoint config hash does not match the configuration");
  }
  if (restore.agent.policy.obs_dim() != agent_.policy.obs_dim() ||
      restore.agent.policy.action_dim != agent_.policy.action_dim) {
    throw std::invalid_argument("learner: checkpoint shape does not match environment " + config.env);
  }
  agent_ = restore.agent;
  counters_ = restore.counters;
  sample_rng_.set_state(restore.sample_rng);
  noise_rng_.set_state(restore.noise_rng);
  last_row_step_ = counters_.env_steps;
  logged_any_ = true;
}

void Learner::ingest(const Transition& t) {
  Transition scaled = t;
  scaled.reward *= config_.reward_scale;
  buffer_.push(scaled);
  ++counters_.env_steps;
  if (t.episode_end) ++counters_.episodes;
}

std::size_t Learner::train(std::size_t n) {
  if (buffer_.size() < config_.batch_size) return 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Minibatch batch = buffer_.sample(config_.batch_size, sample_rng_);
    UpdateStats stats;
    try {
      stats = sac_update(agent_, batch, noise_rng_);
    } catch (const NonFiniteError& e) {
      std::ostringstream msg;
      msg << "learner halted: gradient step " << counters_.grad_steps << ", env step " << counters_.env_steps
          << ", batch slots [";
      for (std::size_t j = 0; j < batch.indices.size(); ++j) msg << (j ? " " : "") << batch.indices[j];
      msg << "]: " << e.what();
      throw NonFiniteError(msg.str());
    }
    ++counters_.grad_steps;
    sum_entropy_ += stats.entropy_estimate;
    sum_q_ += stats.q_loss;
    sum_pi_ += stats.policy_loss;
    sum_alpha_loss_ += stats.alpha_loss;
    ++n_updates_;
    if (on_update) on_update(stats, counters_.env_steps);
  }
  return n;
}

void Learner::process_episode(const std::vector<Transition>& transitions) {
  for (const auto& t : transitions) ingest(t);
  train(config_.gradient_steps * transitions.size());
}

CsvRow Learner::make_row(const EvalStats& eval) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(n_updates_);
  CsvRow row;
  row.step = counters_.env_steps;
  row.episodes = counters_.episodes;
  row.eval_return_mean = eval.return_mean;
  row.eval_return_min = eval.return_min;
  row.eval_return_max = eval.return_max;
  row.entropy_estimate = n_updates_ ? sum_entropy_ / n : nan;
  row.alpha = agent_.current_alpha();
  row.q_loss = n_updates_ ? sum_q_ / n : nan;
  row.policy_loss = n_updates_ ? sum_pi_ / n : nan;
  row.alpha_loss = n_updates_ ? sum_alpha_loss_ / n : nan;
  sum_entropy_ = sum_q_ = sum_pi_ = sum_alpha_loss_ = 0.0;
  n_updates_ = 0;
  last_row_step_ = counters_.env_steps;
  logged_any_ = true;
  return row;
}

std::optional<CsvRow> Learner::log_if_due() {
  if (counters_.env_steps < counters_.next_eval_step) return std::nullopt;
  counters_.next_eval_step = next_multiple(counters_.env_steps, config_.eval_interval);
  return make_row(evaluate_policy(agent_.policy, config_, config_.eval_episodes, derive_seed(config_.seed, 5)));
}

std::optional<CsvRow> Learner::log_final() {
  if (counters_.env_steps == 0 || (logged_any_ && last_row_step_ == counters_.env_steps)) return std::nullopt;
  return make_row(evaluate_policy(agent_.policy, config_, config_.eval_episodes, derive_seed(config_.seed, 5)));
}

bool Learner::publish() {
  ++counters_.version;
  if (counters_.env_steps < counters_.next_publish_step) return false;
  counters_.next_publish_step = next_multiple(counters_.env_steps, config_.checkpoint_interval);
  return true;
}

bool Learner::publish_if_due() {
  if (counters_.env_steps < counters_.next_publish_step) return false;
  counters_.next_publish_step = next_multiple(counters_.env_steps, config_.checkpoint_interval);
  ++counters_.version;
  return true;
}

void Learner::publish_now() {
  ++counters_.version;
  if (counters_.env_steps >= counters_.next_publish_step) {
    counters_.next_publish_step = next_multiple(counters_.env_steps, config_.checkpoint_interval);
  }
}

Checkpoint Learner::checkpoint() const {
  Checkpoint c;
  c.config_hash = config_hash_;
  c.counters = counters_;
  c.agent = agent_;
  c.sample_rng = sample_rng_.state();
  c.noise_rng = noise_rng_.state();
  return c;
}

// ---------------------------------------------------------------------------

std::string trace_line(const Checkpoint& ckpt) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%" PRIu64 " %" PRIu64 " %" PRIu64 " %016" PRIx64 "\n", ckpt.counters.version,
                ckpt.counters.env_steps, ckpt.counters.grad_steps, fnv1a(serialize_checkpoint(ckpt)));
  return buf;
}

TrainResult train_sync(const TrainerConfig& config, const RunOptions& options) {
  config.validate();
  Learner learner(config);
  learner.on_update = options.on_update;
  Actor actor(config, 0, 0, 0);

  std::optional<CsvLog> csv;
  if (options.csv_out) csv.emplace(*options.csv_out, config);
  std::ofstream trace;
  if (options.trace_out) {
    trace.open(*options.trace_out, std::ios::trunc);
    if (!trace) throw std::runtime_error("cannot write trace " + options.trace_out->string());
  }

  TrainResult result;
  auto emit_row = [&](const std::optional<CsvRow>& row) {
    if (!row) return;
    if (csv) csv->write(*row);
    result.rows.push_back(*row);
  };
  auto emit_checkpoint = [&](bool write_file) {
    if (!trace.is_open() && !(write_file && options.checkpoint_dir)) return;
    const Checkpoint ckpt = learner.checkpoint();
    if (trace.is_open()) trace << trace_line(ckpt) << std::flush;
    if (write_file && options.checkpoint_dir) write_checkpoint_file(*options.checkpoint_dir, ckpt);
  };

  emit_checkpoint(true);
  while (!learner.done()) {
    const auto& c = learner.counters();
    actor.load_policy(learner.agent().policy, c.version, c.env_steps, c.episodes);
    const Episode ep = actor.run_episode();
    learner.process_episode(ep.transitions);
    emit_row(learner.log_if_due());
    const bool due = learner.publish();
    emit_checkpoint(due || learner.done());
  }
  emit_row(learner.log_final());

  result.counters = learner.counters();
  result.final_checkpoint = learner.checkpoint();
  return result;
}

}  // namespace sacd
