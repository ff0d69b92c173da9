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

#include "sacd/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sacd/bytes.hpp"
#include "sacd/envs.hpp"
#include "sacd/temperature.hpp"

namespace sacd {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::string format_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

}  // namespace

void TrainerConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "env") {
    env = v;
  } else if (key == "target_entropy") {
    target_entropy = (v == "auto") ? std::nullopt : std::optional<double>(parse_double(key, v));
  } else if (key == "gamma") {
    gamma = parse_double(key, v);
  } else if (key == "tau") {
    tau = parse_double(key, v);
  } else if (key == "learning_rate") {
    learning_rate = parse_double(key, v);
  } else if (key == "batch_size") {
    batch_size = parse_uint(key, v);
  } else if (key == "buffer_capacity") {
    buffer_capacity = parse_uint(key, v);
  } else if (key == "total_steps" || key == "steps") {
    total_steps = parse_uint(key, v);
  } else if (key == "gradient_steps") {
    gradient_steps = parse_uint(key, v);
  } else if (key == "history") {
    history = (v == "auto") ? -1 : static_cast<int>(parse_uint(key, v));
  } else if (key == "seed") {
    seed = parse_uint(key, v);
  } else if (key == "initial_random_steps") {
    initial_random_steps = parse_uint(key, v);
  } else if (key == "action_smoothing_episodes") {
    action_smoothing_episodes = parse_uint(key, v);
  } else if (key == "action_smoothing") {
    action_smoothing = parse_double(key, v);
  } else if (key == "eval_interval") {
    eval_interval = parse_uint(key, v);
  } else if (key == "eval_episodes") {
    eval_episodes = parse_uint(key, v);
  } else if (key == "hidden_units") {
    hidden_units = parse_uint(key, v);
  } else if (key == "hidden_layers") {
    hidden_layers = parse_uint(key, v);
  } else if (key == "checkpoint_interval") {
    checkpoint_interval = parse_uint(key, v);
  } else if (key == "temperature_mode") {
    temperature_mode = v;
  } else if (key == "fixed_alpha") {
    fixed_alpha = (v == "none") ? std::nullopt : std::optional<double>(parse_double(key, v));
  } else if (key == "initial_log_alpha") {
    initial_log_alpha = parse_double(key, v);
  } else if (key == "reward_scale") {
    reward_scale = parse_double(key, v);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

void TrainerConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.resize(hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: " + path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void TrainerConfig::validate() const {
  make_env_model(env);  // throws on unknown names
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("config: ") + what + " must be positive");
  };
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("config: gamma must be in [0, 1)");
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("config: tau must be in (0, 1]");
  positive(learning_rate, "learning_rate");
  positive(static_cast<double>(batch_size), "batch_size");
  positive(static_cast<double>(buffer_capacity), "buffer_capacity");
  positive(static_cast<double>(gradient_steps), "gradient_steps");
  positive(static_cast<double>(eval_interval), "eval_interval");
  positive(static_cast<double>(hidden_units), "hidden_units");
  positive(static_cast<double>(checkpoint_interval), "checkpoint_interval");
  positive(reward_scale, "reward_scale");
  if (fixed_alpha) positive(*fixed_alpha, "fixed_alpha");
  if (!(action_smoothing >= 0.0 && action_smoothing < 1.0)) {
    throw std::invalid_argument("config: action_smoothing must be in [0, 1)");
  }
  if (temperature_mode != "adam" && temperature_mode != "plain") {
    throw std::invalid_argument("config: temperature_mode must be adam or plain");
  }
  if (target_entropy && !std::isfinite(*target_entropy)) throw std::invalid_argument("config: target_entropy must be finite");
}

double TrainerConfig::resolved_target_entropy() const {
  if (target_entropy) return *target_entropy;
  return default_target_entropy(make_env_model(env)->spec().action_dim);
}

std::size_t TrainerConfig::resolved_history() const {
  if (history >= 0) return static_cast<std::size_t>(history);
  return make_env_model(env)->spec().default_history;
}

std::vector<std::size_t> TrainerConfig::hidden() const { return std::vector<std::size_t>(hidden_layers, hidden_units); }

std::string TrainerConfig::to_text() const {
  std::ostringstream o;
  o << "env=" << env << "\n"
    << "target_entropy=" << format_double(resolved_target_entropy()) << "\n"
    << "gamma=" << format_double(gamma) << "\n"
    << "tau=" << format_double(tau) << "\n"
    << "learning_rate=" << format_double(learning_rate) << "\n"
    << "batch_size=" << batch_size << "\n"
    << "buffer_capacity=" << buffer_capacity << "\n"
    << "total_steps=" << total_steps << "\n"
    << "gradient_steps=" << gradient_steps << "\n"
    << "history=" << resolved_history() << "\n"
    << "seed=" << seed << "\n"
    << "initial_random_steps=" << initial_random_steps << "\n"
    << "action_smoothing_episodes=" << action_smoothing_episodes << "\n"
    << "action_smoothing=" << format_double(action_smoothing) << "\n"
    << "eval_interval=" << eval_interval << "\n"
    << "eval_episodes=" << eval_episodes << "\n"
    << "hidden_units=" << hidden_units << "\n"
    << "hidden_layers=" << hidden_layers << "\n"
    << "checkpoint_interval=" << checkpoint_interval << "\n"
    << "temperature_mode=" << temperature_mode << "\n"
    << "fixed_alpha=" << (fixed_alpha ? format_double(*fixed_alpha) : std::string("none")) << "\n"
    << "initial_log_alpha=" << format_double(initial_log_alpha) << "\n"
    << "reward_scale=" << format_double(reward_scale) << "\n";
  return o.str();
}

std::uint64_t TrainerConfig::hash() const { return fnv1a(to_text()); }

}  // namespace sacd
