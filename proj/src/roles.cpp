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

#include "sacd/roles.hpp"

#include <csignal>
#include <chrono>
#include <deque>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "sacd/checkpoint.hpp"
#include "sacd/labeling.hpp"
#include "sacd/transport.hpp"
#include "sacd/wire.hpp"

namespace sacd {
namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

std::string socket_path(const std::filesystem::path& dir, const char* name) {
  const std::string direct = (dir / name).string();
  if (direct.size() < 100) return direct;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "/tmp/sacdesk-%016llx-%s",
                static_cast<unsigned long long>(fnv1a(std::filesystem::absolute(dir).string())), name);
  return buf;
}

std::uint64_t wall_ms() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
          .count());
}

void sleep_ms(int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); }

std::ostream& log(const char* role) { return std::cerr << "[" << role << " " << wall_ms() << "] "; }

class Sequencer {
 public:
  explicit Sequencer(std::uint64_t sender) : sender_(sender) {}
  template <typename Payload>
  WireMessage make(MessageKind kind, const Payload& payload) {
    return WireMessage{kind, ++seq_, sender_, encode_payload(payload)};
  }
  WireMessage heartbeat() { return WireMessage{MessageKind::kHeartbeat, ++seq_, sender_, {}}; }

 private:
  std::uint64_t sender_;
  std::uint64_t seq_ = 0;
};

using DedupKey = std::tuple<std::uint64_t, std::uint64_t, std::uint64_t>;

std::set<DedupKey> load_ingest_log(const std::filesystem::path& path) {
  std::set<DedupKey> keys;
  std::ifstream in(path);
  std::uint64_t s, e, t;
  while (in >> s >> e >> t) keys.emplace(s, e, t);
  return keys;
}

}  // namespace

std::string RunPaths::learner_socket() const { return socket_path(dir, "learner.sock"); }
std::string RunPaths::labeler_socket() const { return socket_path(dir, "labeler.sock"); }

void install_stop_handlers() {
  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
  std::signal(SIGPIPE, SIG_IGN);
}

bool stop_requested() { return g_stop != 0; }

// ---------------------------------------------------------------------------
// Learner

int run_learner(const TrainerConfig& config, const LearnerOptions& options) {
  const RunPaths paths{options.run_dir};
  std::filesystem::create_directories(paths.dir);
  Sequencer seq(make_sender_id(Role::kLearner, 0, 0));

  std::optional<Checkpoint> restored = read_checkpoint_file(paths.dir);
  std::optional<Learner> learner;
  if (restored) {
    learner.emplace(config, *restored);
    log("learner") << "resumed from checkpoint version " << restored->counters.version << " at env step "
                   << restored->counters.env_steps << " with an empty replay buffer\n";
  } else {
    learner.emplace(config);
    log("learner") << "WARNING: no checkpoint in " << paths.dir << "; starting from fresh initialization, version 0\n";
  }

  std::set<DedupKey> seen = load_ingest_log(paths.ingest_log());
  std::ofstream ingest(paths.ingest_log(), std::ios::app);
  std::ofstream versions(paths.versions_log(), std::ios::app);
  std::ofstream trace;
  if (options.trace_out) trace.open(*options.trace_out, restored ? std::ios::app : std::ios::trunc);
  std::optional<CsvLog> csv;
  if (options.csv_out) {
    if (restored && std::filesystem::exists(*options.csv_out)) {
      csv.emplace(CsvLog::append(*options.csv_out));
    } else {
      csv.emplace(*options.csv_out, config);
    }
  }

  std::vector<Connection> peers;
  auto broadcast = [&](const WireMessage& m) {
    for (auto& c : peers) c.queue(m);
  };
  auto publish_file = [&]() {
    const Checkpoint ckpt = learner->checkpoint();
    write_checkpoint_file(paths.dir, ckpt);
    versions << ckpt.counters.version << "\n" << std::flush;
    if (trace.is_open()) trace << trace_line(ckpt) << std::flush;
    broadcast(seq.make(MessageKind::kCheckpointNotice, CheckpointNotice{ckpt.counters.version}));
  };
  auto write_row = [&](const std::optional<CsvRow>& row) {
    if (row && csv) csv->write(*row);
  };

  if (!restored) publish_file();
  const std::uint64_t epoch = wall_ms();
  Listener listener(paths.learner_socket());
  log("learner") << "listening on " << listener.path() << ", epoch " << epoch << "\n";

  try {
    while (!stop_requested()) {
      if (learner->done()) {
        write_row(learner->log_final());
        if (!options.lockstep) {
          learner->publish_now();
          publish_file();
        }
        std::ofstream(paths.done_marker()) << learner->counters().version << "\n";
        for (auto& c : peers) c.flush();
        log("learner") << "finished: " << learner->counters().env_steps << " env steps, "
                       << learner->counters().grad_steps << " gradient steps, version "
                       << learner->counters().version << "\n";
        return 0;
      }

      std::vector<PollEntry> entries{{listener.fd()}};
      for (auto& c : peers) entries.push_back({c.fd(), c.pending_output() > 0});
      poll_entries(entries, 100);
      if (entries[0].readable) {
        while (auto c = listener.accept()) {
          c->queue(seq.make(MessageKind::kClockSync, ClockSync{epoch}));
          c->queue(seq.make(MessageKind::kCheckpointNotice, CheckpointNotice{learner->counters().version}));
          peers.push_back(std::move(*c));
        }
      }
      for (auto& c : peers) {
        c.receive();
        while (auto msg = c.next()) {
          if (msg->kind != MessageKind::kLabeledBatch) continue;
          LabeledBatch batch;
          try {
            batch = decode_labeled_batch(msg->payload);
          } catch (const DecodeError& e) {
            log("learner") << "malformed labeled batch from " << msg->sender << ": " << e.what() << "\n";
            continue;
          }
          std::vector<Transition> fresh;
          for (auto& lt : batch.transitions) {
            const DedupKey key{batch.source, batch.episode_id, lt.step};
            if (!seen.insert(key).second) continue;
            ingest << batch.source << ' ' << batch.episode_id << ' ' << lt.step << '\n';
            fresh.push_back(std::move(lt.transition));
          }
          ingest.flush();
          if (fresh.size() < batch.transitions.size()) {
            log("learner") << "dropped " << batch.transitions.size() - fresh.size()
                           << " duplicate transitions of episode " << batch.episode_id << "\n";
          }
          if (fresh.empty()) continue;
          learner->process_episode(fresh);
          write_row(learner->log_if_due());
          if (options.lockstep) {
            learner->publish();
            publish_file();
          } else if (learner->publish_if_due()) {
            publish_file();
          }
          if (learner->done()) break;
        }
        c.flush();
      }
      std::erase_if(peers, [](const Connection& c) { return !c.open(); });
    }
  } catch (const NonFiniteError& e) {
    log("learner") << "HALT: " << e.what() << "\n";
    std::ofstream(paths.halted_marker()) << e.what() << "\n";
    return kExitNonFinite;
  }
  log("learner") << "stopped by signal\n";
  return 0;
}


// ---------------------------------------------------------------------------
// Labeler

int run_labeler(const TrainerConfig& config, const std::filesystem::path& run_dir) {
  const RunPaths paths{run_dir};
  const auto model = make_env_model(config.env);
  const std::size_t history = config.resolved_history();
  Sequencer seq(make_sender_id(Role::kLabeler, 0, 0));
  Listener listener(paths.labeler_socket());
  log("labeler") << "listening on " << listener.path() << "\n";

  std::optional<Connection> upstream;
  auto last_attempt = std::chrono::steady_clock::now() - std::chrono::seconds(1);
  std::vector<Connection> actors;
  EpisodeAssembler assembler;
  std::deque<WireMessage> outbox;  // labeled batches waiting for the learner
  std::optional<WireMessage> clock;
  std::optional<WireMessage> notice;
  std::uint64_t labeled = 0;

  auto report = [&]() {
    for (const auto& r : assembler.take_reports()) log("labeler") << r << "\n";
  };

  while (!stop_requested()) {
    if (std::filesystem::exists(paths.done_marker())) break;
    if (!upstream || !upstream->open()) {
      if (upstream) {
        log("labeler") << "learner connection lost\n";
        upstream.reset();
      }
      const auto now = std::chrono::steady_clock::now();
      if (now - last_attempt > std::chrono::milliseconds(100)) {
        last_attempt = now;
        upstream = Connection::connect(paths.learner_socket());
        if (upstream) log("labeler") << "connected to learner, " << outbox.size() << " batches queued\n";
      }
    }
    if (upstream) {
      while (!outbox.empty() && upstream->pending_output() < (1u << 20)) {
        upstream->queue(outbox.front());
        outbox.pop_front();
      }
    }

    std::vector<PollEntry> entries{{listener.fd()}};
    if (upstream) entries.push_back({upstream->fd(), upstream->pending_output() > 0});
    for (auto& a : actors) entries.push_back({a.fd(), a.pending_output() > 0});
    poll_entries(entries, 50);

    if (entries[0].readable) {
      while (auto c = listener.accept()) {
        for (const auto* latest : {&clock, &notice}) {
          if (!*latest) continue;
          WireMessage m = seq.heartbeat();
          m.kind = (*latest)->kind;
          m.payload = (*latest)->payload;
          c->queue(m);
        }
        actors.push_back(std::move(*c));
      }
    }
    if (upstream) {
      upstream->receive();
      while (auto msg = upstream->next()) {
        if (msg->kind != MessageKind::kClockSync && msg->kind != MessageKind::kCheckpointNotice) continue;
        auto& latest = msg->kind == MessageKind::kClockSync ? clock : notice;
        latest = WireMessage{msg->kind, 0, 0, msg->payload};
        for (auto& a : actors) {
          WireMessage relay = seq.heartbeat();
          relay.kind = msg->kind;
          relay.payload = msg->payload;
          a.queue(relay);
        }
      }
      upstream->flush();
    }
    for (auto& a : actors) {
      const bool alive = a.receive();
      while (auto msg = a.next()) {
        if (msg->kind != MessageKind::kTrajectoryChunk) continue;
        a.set_peer(msg->sender);
        TrajectoryChunk chunk;
        try {
          chunk = decode_trajectory_chunk(msg->payload);
        } catch (const DecodeError& e) {
          log("labeler") << "malformed chunk from " << msg->sender << ": " << e.what() << "\n";
          continue;
        }
        auto complete = assembler.add(msg->sender, chunk);
        if (!complete) continue;
        LabeledBatch batch;
        batch.source = complete->sender;
        batch.episode_id = complete->episode_id;
        try {
          batch.transitions = label_episode(*model, history, complete->records);
        } catch (const std::invalid_argument& e) {
          log("labeler") << "dropped episode " << complete->episode_id << ": " << e.what() << "\n";
          continue;
        }
        labeled += batch.transitions.size();
        outbox.push_back(seq.make(MessageKind::kLabeledBatch, batch));
      }
      if (!alive && a.peer() != 0) assembler.drop_sender(a.peer());
      a.flush();
    }
    report();
    std::erase_if(actors, [](const Connection& c) { return !c.open(); });
  }
  log("labeler") << "exiting after labeling " << labeled << " transitions\n";
  return 0;
}

// ---------------------------------------------------------------------------
// Actor

int run_actor(const TrainerConfig& config, const ActorOptions& options) {
  const RunPaths paths{options.run_dir};
  const std::uint64_t sender = make_sender_id(Role::kActor, options.index, options.incarnation);
  Sequencer seq(sender);
  const char* who = "actor";

  std::optional<Connection> link;
  std::optional<std::uint64_t> epoch;
  auto last_attempt = std::chrono::steady_clock::now() - std::chrono::seconds(1);
  // Episodes as frame lists; `inflight` were handed to the current
  // connection but may not have left the socket yet.
  std::deque<std::vector<WireMessage>> unsent;
  std::deque<std::vector<WireMessage>> inflight;
  // Env steps generated since the last checkpoint notice or policy load.
  std::uint64_t steps_since_notice = 0;

  auto service = [&](int timeout_ms) {
    if (!link || !link->open()) {
      if (link) {
        log(who) << "labeler connection lost; " << inflight.size() << " episodes will be resent\n";
        while (!inflight.empty()) {
          unsent.push_front(std::move(inflight.back()));
          inflight.pop_back();
        }
        link.reset();
      }
      const auto now = std::chrono::steady_clock::now();
      if (now - last_attempt > std::chrono::milliseconds(100)) {
        last_attempt = now;
        link = Connection::connect(paths.labeler_socket());
      }
      if (!link) {
        sleep_ms(timeout_ms);
        return;
      }
    }
    while (!unsent.empty()) {
      for (const auto& m : unsent.front()) link->queue(m);
      inflight.push_back(std::move(unsent.front()));
      unsent.pop_front();
    }
    std::vector<PollEntry> entries{{link->fd(), link->pending_output() > 0}};
    poll_entries(entries, timeout_ms);
    link->flush();
    if (link->pending_output() == 0) inflight.clear();
    link->receive();
    while (auto msg = link->next()) {
      if (msg->kind == MessageKind::kCheckpointNotice) steps_since_notice = 0;
      if (msg->kind == MessageKind::kClockSync) {
        try {
          epoch = decode_clock_sync(msg->payload).epoch;
        } catch (const DecodeError& e) {
          log(who) << "bad clock sync: " << e.what() << "\n";
        }
      }
    }
  };

  while (!epoch) {
    if (stop_requested() || std::filesystem::exists(paths.done_marker())) return 0;
    service(50);
  }
  log(who) << "index " << options.index << " incarnation " << options.incarnation << " epoch " << *epoch << "\n";

  Actor actor(config, options.index, options.incarnation, *epoch);
  auto load = [&](bool initial) {
    std::optional<Checkpoint> ckpt;
    try {
      ckpt = read_checkpoint_file(paths.dir);
    } catch (const std::exception& e) {
      log(who) << "malformed checkpoint, keeping version " << actor.policy_version() << ": " << e.what() << "\n";
      return;
    }
    if (!ckpt) {
      if (initial) {
        log(who) << "WARNING: no checkpoint in " << paths.dir << "; using fresh initialization, version 0\n";
        const auto spec = make_env(config.env, static_cast<int>(config.resolved_history()))->spec();
        actor.load_policy(make_agent(config, spec.obs_dim, spec.action_dim).policy, 0, 0, 0);
      }
      return;
    }
    if (actor.has_policy() && ckpt->counters.version <= actor.policy_version()) return;
    if (ckpt->config_hash != config.hash()) {
      log(who) << "checkpoint config hash mismatch; ignoring version " << ckpt->counters.version << "\n";
      return;
    }
    actor.load_policy(ckpt->agent.policy, ckpt->counters.version, ckpt->counters.env_steps, ckpt->counters.episodes);
    steps_since_notice = 0;
    log(who) << "loaded version " << ckpt->counters.version << "\n";
  };
  load(true);
  const std::uint64_t step_budget =
      config.checkpoint_interval + options.max_buffered_episodes * make_env(config.env, 0)->spec().max_steps;

  while (!stop_requested()) {
    if (std::filesystem::exists(paths.done_marker())) break;
    if (options.lockstep && actor.episodes_run() > 0) {
      const std::uint64_t held = actor.policy_version();
      while (!stop_requested() && !std::filesystem::exists(paths.done_marker())) {
        const auto v = peek_checkpoint_version(paths.dir);
        if (v && *v > held) break;
        service(20);
      }
      if (stop_requested() || std::filesystem::exists(paths.done_marker())) break;
    }
    const auto v = peek_checkpoint_version(paths.dir);
    if (v && (!actor.has_policy() || *v > actor.policy_version())) load(false);

    while (!stop_requested() && unsent.size() + inflight.size() >= options.max_buffered_episodes) service(50);
    if (!options.lockstep && steps_since_notice >= step_budget) {
      const auto stalled = std::chrono::steady_clock::now();
      while (!stop_requested() && steps_since_notice >= step_budget &&
             std::chrono::steady_clock::now() - stalled < std::chrono::seconds(2)) {
        service(50);
      }
      const auto v2 = peek_checkpoint_version(paths.dir);
      if (v2 && *v2 > actor.policy_version()) load(false);
      steps_since_notice = 0;
    }
    const Episode ep = actor.run_episode();
    steps_since_notice += ep.transitions.size();
    std::vector<WireMessage> frames;
    for (const auto& chunk : chunk_episode(ep, options.chunk_records)) {
      frames.push_back(seq.make(MessageKind::kTrajectoryChunk, chunk));
    }
    unsent.push_back(std::move(frames));
    service(0);
  }
  // Drain what is queued before leaving.
  for (int i = 0; i < 20 && link && (!unsent.empty() || link->pending_output() > 0); ++i) service(50);
  log(who) << "exiting after " << actor.episodes_run() << " episodes\n";
  return 0;
}

}  // namespace sacd
