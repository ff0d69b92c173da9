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

#include "sacd/labeling.hpp"

#include <algorithm>
#include <stdexcept>

namespace sacd {

std::vector<LabeledTransition> label_episode(const EnvModel& model, std::size_t history,
                                             std::span<const StepRecord> records) {
  if (records.empty()) throw std::invalid_argument("label_episode: no records");
  const EnvSpec& spec = model.spec();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const StepRecord& r = records[i];
    if (r.step != i) throw std::invalid_argument("label_episode: gap before step " + std::to_string(i));
    if (r.raw.size() != spec.raw_dim || r.action.size() != spec.action_dim) {
      throw std::invalid_argument("label_episode: record shape does not match " + spec.name);
    }
    const bool last = i + 1 == records.size();
    if ((r.done != DoneReason::kNone) != last) {
      throw std::invalid_argument("label_episode: episode end flag misplaced at step " + std::to_string(i));
    }
  }
  if (records.front().initial.size() != spec.raw_dim) {
    throw std::invalid_argument("label_episode: first record lacks the initial state");
  }

  ObservationHistory hist(spec.obs_dim, spec.action_dim, history);
  std::vector<double> obs = hist.reset(model.observe(records.front().initial));
  std::span<const double> before = records.front().initial;
  std::vector<LabeledTransition> out;
  out.reserve(records.size());
  for (const StepRecord& r : records) {
    std::vector<double> applied(r.action);
    for (double& a : applied) a = std::clamp(a, -1.0, 1.0);
    LabeledTransition lt;
    lt.step = r.step;
    Transition& t = lt.transition;
    t.reward = model.reward(before, r.raw, r.action);
    t.next_obs = hist.advance(applied, model.observe(r.raw));
    t.obs = std::move(obs);
    t.action = r.action;
    t.done = r.done == DoneReason::kTerminal;
    t.episode_end = r.done != DoneReason::kNone;
    t.timestamp = r.timestamp;
    obs = t.next_obs;
    before = r.raw;
    out.push_back(std::move(lt));
  }
  return out;
}

void EpisodeAssembler::drop(const Key& key, const std::string& why) {
  reports_.push_back("dropped episode " + std::to_string(key.second) + " of sender " + std::to_string(key.first) +
                     ": " + why);
  open_.erase(key);
  closed_.insert(key);
  ++dropped_;
}

std::optional<EpisodeAssembler::Complete> EpisodeAssembler::add(std::uint64_t sender, const TrajectoryChunk& chunk) {
  const Key key{sender, chunk.episode_id};
  if (closed_.count(key)) {
    reports_.push_back("ignored chunk of closed episode " + std::to_string(chunk.episode_id));
    return std::nullopt;
  }
  for (auto it = open_.begin(); it != open_.end();) {
    if (it->first.first == sender && it->first.second != chunk.episode_id) {
      const Key stale = it->first;
      ++it;
      drop(stale, "gap: sender moved on to episode " + std::to_string(chunk.episode_id));
    } else {
      ++it;
    }
  }
  if (chunk.total_records == 0) {
    drop(key, "empty episode");
    return std::nullopt;
  }
  Partial& p = open_[key];
  if (p.total == 0) p.total = chunk.total_records;
  if (p.total != chunk.total_records) {
    drop(key, "inconsistent episode length");
    return std::nullopt;
  }
  for (const StepRecord& r : chunk.records) {
    if (r.step >= p.total) {
      drop(key, "step " + std::to_string(r.step) + " beyond episode length " + std::to_string(p.total));
      return std::nullopt;
    }
    auto [it, inserted] = p.records.emplace(r.step, r);
    if (!inserted && !(it->second == r)) {
      drop(key, "conflicting copies of step " + std::to_string(r.step));
      return std::nullopt;
    }
  }
  if (p.records.size() < p.total) return std::nullopt;

  Complete done;
  done.sender = sender;
  done.episode_id = chunk.episode_id;
  done.records.reserve(p.total);
  for (auto& [step, rec] : p.records) done.records.push_back(std::move(rec));
  open_.erase(key);
  closed_.insert(key);
  return done;
}

std::size_t EpisodeAssembler::drop_sender(std::uint64_t sender) {
  std::vector<Key> keys;
  for (const auto& [key, p] : open_)
    if (key.first == sender) keys.push_back(key);
  for (const auto& key : keys) drop(key, "sender disconnected mid-episode");
  return keys.size();
}

}  // namespace sacd
