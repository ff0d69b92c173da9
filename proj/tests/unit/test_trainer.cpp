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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sacd/checkpoint.hpp"
#include "sacd/config.hpp"
#include "sacd/trainer.hpp"

namespace fs = std::filesystem;

namespace {

sacd::TrainerConfig tiny(const std::string& env = "pendulum") {
  sacd::TrainerConfig c;
  c.env = env;
  c.hidden_units = 16;
  c.batch_size = 32;
  c.total_steps = 600;
  c.initial_random_steps = 100;
  c.eval_interval = 200;
  c.eval_episodes = 2;
  c.checkpoint_interval = 200;
  return c;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("sacd-test-" + std::to_string(::getpid()) + "-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("keys, aliases and validation") {
    sacd::TrainerConfig c;
    c.set("steps", "1234");
    c.set("target_entropy", "auto");
    c.set("fixed_alpha", "0.5");
    CHECK(c.total_steps == 1234);
    CHECK_FALSE(c.target_entropy.has_value());
    CHECK(c.fixed_alpha == 0.5);
    CHECK_THROWS_AS(c.set("no_such_key", "1"), std::invalid_argument);
    CHECK_THROWS_AS(c.set("gamma", "abc"), std::invalid_argument);
    c.gamma = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    sacd::TrainerConfig e;
    e.env = "cartpole";
    CHECK_THROWS_AS(e.validate(), std::invalid_argument);
  }

  TEST_CASE("resolved defaults") {
    sacd::TrainerConfig c;
    CHECK(c.resolved_target_entropy() == -1.0);
    c.env = "crawler";
    CHECK(c.resolved_target_entropy() == -2.0);
    CHECK(c.resolved_history() == 5);
    c.target_entropy = -0.5;
    CHECK(c.resolved_target_entropy() == -0.5);
    CHECK(c.hidden() == std::vector<std::size_t>{256, 256});
  }

  TEST_CASE("file then overrides, canonical text and hash") {
    const auto dir = scratch("cfg");
    {
      std::ofstream f(dir / "c.txt");
      f << "# comment\nenv = pointmass\nsteps=500  # trailing\n\nseed=3\n";
    }
    sacd::TrainerConfig c;
    c.load_file((dir / "c.txt").string());
    CHECK(c.env == "pointmass");
    CHECK(c.total_steps == 500);
    CHECK(c.seed == 3);

    sacd::TrainerConfig round;
    std::istringstream lines(c.to_text());
    std::string line;
    while (std::getline(lines, line)) {
      const auto eq = line.find('=');
      round.set(line.substr(0, eq), line.substr(eq + 1));
    }
    CHECK(round.to_text() == c.to_text());
    CHECK(round.hash() == c.hash());
    round.seed = 4;
    CHECK(round.hash() != c.hash());
    fs::remove_all(dir);
  }
}

TEST_SUITE("checkpoint") {
  TEST_CASE("round trip after training, bit-exact both ways") {
    sacd::TrainerConfig c = tiny();
    c.total_steps = 400;
    const auto result = sacd::train_sync(c);
    const auto& ckpt = result.final_checkpoint;
    const auto bytes = sacd::serialize_checkpoint(ckpt);
    const auto back = sacd::parse_checkpoint(bytes);
    CHECK(back == ckpt);
    CHECK(sacd::serialize_checkpoint(back) == bytes);
    CHECK(back.config_hash == c.hash());
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "SACA");
  }

  TEST_CASE("every truncation and trailing garbage is a decode error") {
    const auto ckpt = sacd::Learner(tiny()).checkpoint();
    auto bytes = sacd::serialize_checkpoint(ckpt);
    for (std::size_t cut = 0; cut < bytes.size(); cut += 97) {
      CHECK_THROWS_AS(sacd::parse_checkpoint(std::span<const std::uint8_t>(bytes.data(), cut)), sacd::DecodeError);
    }
    bytes.push_back(0);
    CHECK_THROWS_AS(sacd::parse_checkpoint(bytes), sacd::DecodeError);
    bytes.pop_back();
    bytes[0] = 'X';
    CHECK_THROWS_AS(sacd::parse_checkpoint(bytes), sacd::DecodeError);
  }

  TEST_CASE("atomic file and header peek") {
    const auto dir = scratch("ckpt");
    CHECK_FALSE(sacd::read_checkpoint_file(dir).has_value());
    CHECK_FALSE(sacd::peek_checkpoint_version(dir).has_value());
    auto ckpt = sacd::Learner(tiny()).checkpoint();
    ckpt.counters.version = 17;
    sacd::write_checkpoint_file(dir, ckpt);
    CHECK(sacd::peek_checkpoint_version(dir) == 17u);
    CHECK(*sacd::read_checkpoint_file(dir) == ckpt);
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
    CHECK(files == 1);
    {
      std::ofstream f(dir / sacd::kCheckpointFile, std::ios::binary | std::ios::trunc);
      f << "SACA";
    }
    CHECK_THROWS_AS(sacd::read_checkpoint_file(dir), sacd::DecodeError);
    fs::remove_all(dir);
  }
}

TEST_SUITE("trainer") {
  TEST_CASE("zero steps: empty log and a version-0 checkpoint") {
    const auto dir = scratch("zero");
    sacd::TrainerConfig c = tiny();
    c.total_steps = 0;
    sacd::RunOptions o;
    o.csv_out = dir / "log.csv";
    o.checkpoint_dir = dir / "ckpt";
    const auto r = sacd::train_sync(c, o);
    CHECK(r.rows.empty());
    CHECK(r.counters.version == 0);
    CHECK(sacd::peek_checkpoint_version(dir / "ckpt") == 0u);
    const auto csv = slurp(dir / "log.csv");
    CHECK(csv.find(sacd::kCsvHeader) != std::string::npos);
    CHECK(csv.substr(csv.find(sacd::kCsvHeader) + std::string(sacd::kCsvHeader).size()) == "\n");
    fs::remove_all(dir);
  }

  TEST_CASE("same config and seed give bit-identical CSV and checkpoint") {
    const auto dir = scratch("det");
    const auto c = tiny();
    for (const char* run : {"a", "b"}) {
      sacd::RunOptions o;
      o.csv_out = dir / (std::string(run) + ".csv");
      o.checkpoint_dir = dir / run;
      sacd::train_sync(c, o);
    }
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(slurp(dir / "a" / sacd::kCheckpointFile) == slurp(dir / "b" / sacd::kCheckpointFile));
    auto other = c;
    other.seed = 1;
    sacd::RunOptions o;
    o.csv_out = dir / "c.csv";
    sacd::train_sync(other, o);
    CHECK(slurp(dir / "a.csv") != slurp(dir / "c.csv"));
    fs::remove_all(dir);
  }

  TEST_CASE("CSV begins with the resolved config and its hash") {
    const auto dir = scratch("echo");
    const auto c = tiny();
    sacd::RunOptions o;
    o.csv_out = dir / "log.csv";
    const auto r = sacd::train_sync(c, o);
    const auto csv = slurp(dir / "log.csv");
    CHECK(csv.rfind("# resolved config\n", 0) == 0);
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(c.hash()));
    CHECK(csv.find(std::string("# config_hash=") + hash) != std::string::npos);
    CHECK(r.final_checkpoint.config_hash == c.hash());
    CHECK(r.rows.size() == 3);
    CHECK(r.rows.back().step == 600);
    fs::remove_all(dir);
  }

  TEST_CASE("unknown env is rejected") {
    auto c = tiny();
    c.env = "cartpole";
    CHECK_THROWS_AS(sacd::train_sync(c), std::invalid_argument);
  }

  TEST_CASE("learner trains only once data arrives") {
    sacd::Learner l(tiny());
    CHECK(l.train(5) == 0);
    CHECK(l.counters().grad_steps == 0);
  }

  TEST_CASE("restored learner publishes the next version") {
    auto c = tiny();
    sacd::Learner l(c);
    l.publish();
    l.publish();
    const auto ckpt = l.checkpoint();
    sacd::Learner restored(c, ckpt);
    CHECK(restored.counters() == ckpt.counters);
    CHECK(restored.buffer().size() == 0);
    restored.publish_now();
    CHECK(restored.counters().version == ckpt.counters.version + 1);
    auto other = c;
    other.seed = 9;
    CHECK_THROWS(sacd::Learner(other, ckpt));
  }

  TEST_CASE("non-finite losses halt with diagnostics") {
    auto c = tiny();
    sacd::Learner l(c);
    sacd::Transition t;
    t.obs = {1.0, 0.0, 0.0};
    t.action = {0.0};
    t.next_obs = {1.0, 0.0, 0.0};
    t.reward = 1e300;
    for (int i = 0; i < 40; ++i) l.ingest(t);
    try {
      for (int i = 0; i < 5; ++i) l.train(1);
      FAIL("expected a halt");
    } catch (const sacd::NonFiniteError& e) {
      const std::string what = e.what();
      CHECK(what.find("gradient step") != std::string::npos);
      CHECK(what.find("batch") != std::string::npos);
    }
  }

  TEST_CASE("actor episodes: length contract and version-0 policy") {
    auto c = tiny("crawler");
    sacd::Actor actor(c, 0);
    CHECK_THROWS(actor.run_episode());
    const auto spec = sacd::make_env("crawler", 5)->spec();
    actor.load_policy(sacd::make_agent(c, spec.obs_dim, spec.action_dim).policy, 0, 0, 0);
    for (int i = 0; i < 3; ++i) {
      const auto ep = actor.run_episode();
      CHECK(ep.records.size() <= 500);
      CHECK(ep.records.size() == ep.transitions.size());
      CHECK(ep.records.back().done != sacd::DoneReason::kNone);
      CHECK(actor.policy_version() == 0);
    }
    actor.load_policy(sacd::make_agent(c, spec.obs_dim, spec.action_dim).policy, 2, 0, 0);
    CHECK(actor.policy_version() == 2);
    CHECK_THROWS(actor.load_policy(sacd::make_agent(c, spec.obs_dim, spec.action_dim).policy, 1, 0, 0));
  }

  TEST_CASE("warm-up actions are uniform, later ones follow the policy") {
    auto c = tiny("pointmass");
    c.initial_random_steps = 100;
    sacd::Actor actor(c, 0);
    const auto spec = sacd::make_env("pointmass", 0)->spec();
    auto policy = sacd::make_agent(c, spec.obs_dim, spec.action_dim).policy;
    for (auto& l : policy.net.layers) {
      l.weight.fill(0.0);
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    policy.net.layers.back().bias = {0.5, -0.5, -20.0, -20.0};
    actor.load_policy(policy, 0, 0, 0);
    std::vector<std::vector<double>> actions;
    while (actions.size() < 300) {
      for (const auto& t : actor.run_episode().transitions) actions.push_back(t.action);
    }
    double spread = 0.0;
    for (std::size_t i = 0; i < 100; ++i) spread += std::abs(actions[i][0] - std::tanh(0.5));
    CHECK(spread / 100 > 0.3);
    for (std::size_t i = 100; i < 300; ++i) {
      CHECK(actions[i][0] == doctest::Approx(std::tanh(0.5)).epsilon(1e-6));
      CHECK(actions[i][1] == doctest::Approx(std::tanh(-0.5)).epsilon(1e-6));
    }
  }

  TEST_CASE("action smoothing is an exponential moving average from zero") {
    auto c = tiny("pointmass");
    c.initial_random_steps = 0;
    c.action_smoothing_episodes = 1;
    sacd::Actor actor(c, 0);
    const auto spec = sacd::make_env("pointmass", 0)->spec();
    auto policy = sacd::make_agent(c, spec.obs_dim, spec.action_dim).policy;
    for (auto& l : policy.net.layers) l.weight.fill(0.0);
    policy.net.layers.back().bias = {1.0, 1.0, -20.0, -20.0};
    actor.load_policy(policy, 0, 0, 0);
    const auto first = actor.run_episode();
    double expect = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      expect = 0.8 * expect + 0.2 * std::tanh(1.0);
      CHECK(first.transitions[i].action[0] == doctest::Approx(expect).epsilon(1e-9));
    }
    const auto second = actor.run_episode();
    CHECK(second.transitions[0].action[0] == doctest::Approx(std::tanh(1.0)).epsilon(1e-9));
  }

  TEST_CASE("evaluation is deterministic") {
    const auto c = tiny();
    const auto spec = sacd::make_env("pendulum", 0)->spec();
    const auto policy = sacd::make_agent(c, spec.obs_dim, spec.action_dim).policy;
    const auto a = sacd::evaluate_policy(policy, c, 3, 5);
    const auto b = sacd::evaluate_policy(policy, c, 3, 5);
    CHECK(a.returns == b.returns);
    CHECK(a.length_mean == 200.0);
    CHECK(a.return_min <= a.return_mean);
    CHECK(a.return_mean <= a.return_max);
  }
}
