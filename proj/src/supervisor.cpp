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

#include "sacd/supervisor.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <thread>

#include "sacd/checkpoint.hpp"
#include "sacd/rng.hpp"
#include "sacd/roles.hpp"
#include "sacd/transport.hpp"

namespace sacd {
namespace {

using Clock = std::chrono::steady_clock;

struct Child {
  std::string name;
  std::vector<std::string> base_args;
  bool is_actor = false;
  std::uint32_t incarnation = 0;
  pid_t pid = -1;
  std::optional<Clock::time_point> restart_at;
  std::optional<std::uint64_t> chaos_version;
  bool chaos_done = false;
  int crashes = 0;
};

Child make_child(std::string name, std::vector<std::string> args) {
  Child c;
  c.name = std::move(name);
  c.base_args = std::move(args);
  return c;
}

pid_t spawn(const std::filesystem::path& exe, const std::vector<std::string>& args,
            const std::filesystem::path& log_path) {
  std::vector<std::string> argv_store{exe.string()};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  argv.push_back(nullptr);
  const pid_t pid = ::fork();
  if (pid < 0) throw std::runtime_error("fork failed: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    const int fd = ::open(log_path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd >= 0) {
      ::dup2(fd, STDOUT_FILENO);
      ::dup2(fd, STDERR_FILENO);
      ::close(fd);
    }
    ::execv(argv[0], argv.data());
    std::perror("execv");
    ::_exit(127);
  }
  return pid;
}

}  // namespace

AsyncResult run_async(const TrainerConfig& config, const AsyncOptions& options) {
  config.validate();
  if (options.actors == 0) throw std::invalid_argument("async: need at least one actor");
  if (options.lockstep && options.actors != 1) throw std::invalid_argument("async: lockstep runs exactly one actor");
  const RunPaths paths{options.run_dir};
  std::filesystem::create_directories(paths.dir);
  if (std::filesystem::exists(paths.dir / kCheckpointFile)) {
    throw std::runtime_error("async: " + paths.dir.string() + " already holds a checkpoint; use a fresh directory");
  }
  for (const auto& sock : {paths.learner_socket(), paths.labeler_socket()}) {
    if (socket_in_use(sock)) throw std::runtime_error("async: socket " + sock + " is in use by another run");
  }
  for (const auto& stale : {paths.ingest_log(), paths.versions_log(), paths.done_marker(), paths.halted_marker()}) {
    std::filesystem::remove(stale);
  }
  {
    std::ofstream cfg(paths.config_file(), std::ios::trunc);
    cfg << config.to_text();
  }
  const std::filesystem::path exe =
      options.executable ? *options.executable : std::filesystem::read_symlink("/proc/self/exe");
  if (!std::filesystem::exists(exe)) throw std::runtime_error("async: executable " + exe.string() + " not found");

  AsyncResult result;
  std::ofstream events(paths.dir / "supervisor.log", std::ios::app);
  auto event = [&](const std::string& e) {
    result.events.push_back(e);
    events << e << "\n" << std::flush;
  };

  const std::string dir = paths.dir.string();
  const std::string cfg = paths.config_file().string();
  std::vector<Child> children;
  {
    Child learner = make_child("learner", {"learner", "--run-dir", dir, "--config", cfg});
    if (options.csv_out) learner.base_args.insert(learner.base_args.end(), {"--csv-out", options.csv_out->string()});
    if (options.trace_out) learner.base_args.insert(learner.base_args.end(), {"--trace-out", options.trace_out->string()});
    if (options.lockstep) learner.base_args.push_back("--lockstep");
    children.push_back(learner);
    children.push_back(make_child("labeler", {"labeler", "--run-dir", dir, "--config", cfg}));
    for (std::size_t i = 0; i < options.actors; ++i) {
      Child a = make_child("actor-" + std::to_string(i), {"actor", "--run-dir", dir, "--config", cfg, "--index", std::to_string(i)});
      if (options.lockstep) a.base_args.push_back("--lockstep");
      a.is_actor = true;
      children.push_back(a);
    }
  }
  if (options.chaos_seed) {
    Rng rng(*options.chaos_seed);
    const std::uint64_t versions = std::max<std::uint64_t>(
        4, options.lockstep ? config.total_steps / 200 : config.total_steps / config.checkpoint_interval);
    for (std::size_t i = 0; i < 3 && i < children.size(); ++i) {
      children[i].chaos_version = 2 + rng.index(static_cast<std::size_t>(versions - 3));
      event("chaos: " + children[i].name + " will be killed at checkpoint version " +
            std::to_string(*children[i].chaos_version));
    }
  }

  auto start = [&](Child& c) {
    std::vector<std::string> args = c.base_args;
    if (c.is_actor) args.insert(args.end(), {"--incarnation", std::to_string(c.incarnation)});
    c.pid = spawn(exe, args, paths.dir / (c.name + ".log"));
    c.restart_at.reset();
    event("started " + c.name + " pid " + std::to_string(c.pid) +
          (c.is_actor ? " incarnation " + std::to_string(c.incarnation) : ""));
  };
  auto terminate_all = [&]() {
    for (auto& c : children)
      if (c.pid > 0) ::kill(c.pid, SIGTERM);
    const auto deadline = Clock::now() + std::chrono::seconds(3);
    for (auto& c : children) {
      while (c.pid > 0) {
        int status = 0;
        const pid_t r = ::waitpid(c.pid, &status, WNOHANG);
        if (r == c.pid || r < 0) {
          c.pid = -1;
        } else if (Clock::now() > deadline) {
          ::kill(c.pid, SIGKILL);
          ::waitpid(c.pid, &status, 0);
          c.pid = -1;
        } else {
          std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
      }
    }
  };

  // The learner creates the version-0 checkpoint and its socket; give it a
  // head start so the others find both.
  start(children[0]);
  for (int i = 0; i < 500 && !socket_in_use(paths.learner_socket()); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  for (std::size_t i = 1; i < children.size(); ++i) start(children[i]);

  const auto began = Clock::now();
  for (;;) {
    if (stop_requested()) {
      event("interrupted; terminating children");
      terminate_all();
      result.exit_code = 130;
      return result;
    }
    if (options.timeout_seconds > 0 &&
        std::chrono::duration<double>(Clock::now() - began).count() > options.timeout_seconds) {
      event("timeout; terminating children");
      terminate_all();
      result.exit_code = 124;
      return result;
    }
    if (options.chaos_seed) {
      const auto version = peek_checkpoint_version(paths.dir);
      for (auto& c : children) {
        if (c.chaos_version && !c.chaos_done && c.pid > 0 && version && *version >= *c.chaos_version) {
          c.chaos_done = true;
          ::kill(c.pid, SIGKILL);
          event("chaos: killed " + c.name + " at checkpoint version " + std::to_string(*version));
        }
      }
    }
    for (auto& c : children) {
      if (c.pid <= 0) continue;
      int status = 0;
      if (::waitpid(c.pid, &status, WNOHANG) != c.pid) continue;
      c.pid = -1;
      const bool clean = WIFEXITED(status) && WEXITSTATUS(status) == 0;
      if (&c == &children[0]) {
        if (clean && std::filesystem::exists(paths.done_marker())) {
          event("learner finished");
          terminate_all();
          result.exit_code = 0;
          return result;
        }
        if (WIFEXITED(status) && WEXITSTATUS(status) == kExitNonFinite) {
          event("learner halted on a non-finite loss");
          terminate_all();
          result.exit_code = kExitNonFinite;
          return result;
        }
      }
      const std::string how = WIFSIGNALED(status) ? "signal " + std::to_string(WTERMSIG(status))
                                                  : "status " + std::to_string(WEXITSTATUS(status));
      event(c.name + " exited with " + how + "; restarting");
      if (!(WIFSIGNALED(status) && WTERMSIG(status) == SIGKILL && c.chaos_done) && ++c.crashes > 5) {
        event(c.name + " keeps failing; giving up");
        terminate_all();
        result.exit_code = 1;
        return result;
      }
      if (c.is_actor) ++c.incarnation;
      c.restart_at = Clock::now() + std::chrono::milliseconds(options.restart_delay_ms);
      ++result.restarts;
    }
    for (auto& c : children) {
      if (c.pid <= 0 && c.restart_at && Clock::now() >= *c.restart_at) start(c);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

}  // namespace sacd
