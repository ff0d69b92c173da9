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

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sacd/bytes.hpp"
#include "sacd/replay.hpp"
#include "sacd/trainer.hpp"

namespace sacd {

enum class MessageKind : std::uint8_t {
  kTrajectoryChunk = 1,
  kLabeledBatch = 2,
  kCheckpointNotice = 3,
  kClockSync = 4,
  kHeartbeat = 5,
};

bool is_known_kind(std::uint8_t kind);
const char* kind_name(MessageKind kind);

struct WireMessage {
  MessageKind kind = MessageKind::kHeartbeat;
  std::uint64_t seq = 0;
  std::uint64_t sender = 0;
  std::vector<std::uint8_t> payload;
  friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

// Frame: u32 payload length, u8 kind, u64 sequence, u64 sender, payload.
inline constexpr std::size_t kFrameHeaderSize = 21;
inline constexpr std::uint32_t kMaxPayload = 1u << 28;

std::vector<std::uint8_t> encode_frame(const WireMessage& msg);
void append_frame(std::vector<std::uint8_t>& out, const WireMessage& msg);

struct FrameStatus {
  enum Kind { kMessage, kSkipped, kIncomplete } status = kIncomplete;
  WireMessage message;           // valid for kMessage
  std::size_t consumed = 0;      // bytes of the frame, 0 when incomplete
  std::uint8_t raw_kind = 0;     // kind byte, also for skipped frames
};

// Looks at one frame at the front of `data`. Incomplete input is not an
// error here; oversized length fields are.
FrameStatus peek_frame(std::span<const std::uint8_t> data, std::size_t base_offset = 0);

// Decodes a buffer holding whole frames. Unknown kinds are skipped and
// described in `reports`; a truncated final frame throws DecodeError.
std::vector<WireMessage> decode_frames(std::span<const std::uint8_t> data, std::vector<std::string>* reports = nullptr);

// Exactly one frame and nothing else.
WireMessage decode_frame(std::span<const std::uint8_t> data);

// Incremental decoder for a byte stream.
class FrameReader {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  // Next complete known message; unknown kinds are skipped and passed to
  // `on_skip`.
  std::optional<WireMessage> next();
  std::size_t buffered() const { return buf_.size() - start_; }
  std::uint64_t stream_offset() const { return consumed_; }

  std::function<void(const std::string&)> on_skip;

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t start_ = 0;
  std::uint64_t consumed_ = 0;
};

// ---------------------------------------------------------------------------
// Sender ids: role in the top byte, index and incarnation below.

enum class Role : std::uint8_t { kLearner = 1, kLabeler = 2, kActor = 3, kSupervisor = 4 };
std::uint64_t make_sender_id(Role role, std::uint32_t index, std::uint32_t incarnation);
Role sender_role(std::uint64_t sender);

// ---------------------------------------------------------------------------
// Payloads

struct TrajectoryChunk {
  std::uint64_t episode_id = 0;
  std::uint64_t total_records = 0;  // records in the whole episode
  std::vector<StepRecord> records;
  friend bool operator==(const TrajectoryChunk&, const TrajectoryChunk&) = default;
};

struct LabeledTransition {
  std::uint64_t step = 0;
  Transition transition;
  friend bool operator==(const LabeledTransition&, const LabeledTransition&) = default;
};

struct LabeledBatch {
  std::uint64_t source = 0;  // actor sender id
  std::uint64_t episode_id = 0;
  std::vector<LabeledTransition> transitions;
  friend bool operator==(const LabeledBatch&, const LabeledBatch&) = default;
};

struct CheckpointNotice {
  std::uint64_t version = 0;
  friend bool operator==(const CheckpointNotice&, const CheckpointNotice&) = default;
};

struct ClockSync {
  std::uint64_t epoch = 0;
  friend bool operator==(const ClockSync&, const ClockSync&) = default;
};

std::vector<std::uint8_t> encode_payload(const TrajectoryChunk& c);
std::vector<std::uint8_t> encode_payload(const LabeledBatch& b);
std::vector<std::uint8_t> encode_payload(const CheckpointNotice& n);
std::vector<std::uint8_t> encode_payload(const ClockSync& c);

TrajectoryChunk decode_trajectory_chunk(std::span<const std::uint8_t> payload);
LabeledBatch decode_labeled_batch(std::span<const std::uint8_t> payload);
CheckpointNotice decode_checkpoint_notice(std::span<const std::uint8_t> payload);
ClockSync decode_clock_sync(std::span<const std::uint8_t> payload);

// Splits an episode into chunks of at most `max_records` records.
std::vector<TrajectoryChunk> chunk_episode(const Episode& ep, std::size_t max_records);

}  // namespace sacd
