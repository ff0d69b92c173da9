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

#include "sacd/wire.hpp"

#include <algorithm>
#include <cstring>

namespace sacd {
namespace {

void write_record(ByteWriter& w, const StepRecord& r) {
  w.u64(r.step);
  w.u64(r.timestamp);
  w.u8(static_cast<std::uint8_t>(r.done));
  w.f64_vector(r.raw);
  w.f64_vector(r.action);
  w.f64_vector(r.initial);
}

StepRecord read_record(ByteReader& in) {
  StepRecord r;
  r.step = in.u64();
  r.timestamp = in.u64();
  const std::size_t at = in.stream_offset();
  const std::uint8_t done = in.u8();
  if (done > 2) throw DecodeError("trajectory record: bad done reason " + std::to_string(done), at);
  r.done = static_cast<DoneReason>(done);
  r.raw = in.f64_vector();
  r.action = in.f64_vector();
  r.initial = in.f64_vector();
  return r;
}

void require_end(const ByteReader& in, const char* what) {
  if (!in.at_end()) throw DecodeError(std::string(what) + ": trailing bytes", in.stream_offset());
}

std::uint64_t read_count(ByteReader& in, std::size_t min_item_bytes, const char* what) {
  const std::size_t at = in.stream_offset();
  const std::uint64_t n = in.u64();
  if (n > in.remaining() / min_item_bytes) throw DecodeError(std::string(what) + ": count exceeds payload", at);
  return n;
}

}  // namespace

bool is_known_kind(std::uint8_t kind) { return kind >= 1 && kind <= 5; }

const char* kind_name(MessageKind kind) {
  switch (kind) {
    case MessageKind::kTrajectoryChunk: return "trajectory-chunk";
    case MessageKind::kLabeledBatch: return "labeled-batch";
    case MessageKind::kCheckpointNotice: return "checkpoint-notice";
    case MessageKind::kClockSync: return "clock-sync";
    case MessageKind::kHeartbeat: return "heartbeat";
  }
  return "unknown";
}

void append_frame(std::vector<std::uint8_t>& out, const WireMessage& msg) {
  if (msg.payload.size() > kMaxPayload) throw std::invalid_argument("encode_frame: payload too large");
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(msg.payload.size()));
  w.u8(static_cast<std::uint8_t>(msg.kind));
  w.u64(msg.seq);
  w.u64(msg.sender);
  const auto head = w.take();
  out.insert(out.end(), head.begin(), head.end());
  out.insert(out.end(), msg.payload.begin(), msg.payload.end());
}

std::vector<std::uint8_t> encode_frame(const WireMessage& msg) {
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderSize + msg.payload.size());
  append_frame(out, msg);
  return out;
}

FrameStatus peek_frame(std::span<const std::uint8_t> data, std::size_t base_offset) {
  FrameStatus st;
  if (data.size() < kFrameHeaderSize) return st;
  ByteReader in(data, base_offset);
  const std::uint32_t len = in.u32();
  if (len > kMaxPayload) throw DecodeError("frame: payload length " + std::to_string(len) + " exceeds limit", base_offset);
  if (data.size() < kFrameHeaderSize + len) return st;
  st.raw_kind = in.u8();
  st.consumed = kFrameHeaderSize + len;
  if (!is_known_kind(st.raw_kind)) {
    st.status = FrameStatus::kSkipped;
    return st;
  }
  st.status = FrameStatus::kMessage;
  st.message.kind = static_cast<MessageKind>(st.raw_kind);
  st.message.seq = in.u64();
  st.message.sender = in.u64();
  const auto body = in.bytes(len);
  st.message.payload.assign(body.begin(), body.end());
  return st;
}

std::vector<WireMessage> decode_frames(std::span<const std::uint8_t> data, std::vector<std::string>* reports) {
  std::vector<WireMessage> out;
  std::size_t pos = 0;
  while (pos < data.size()) {
    FrameStatus st = peek_frame(data.subspan(pos), pos);
    if (st.status == FrameStatus::kIncomplete) {
      const std::size_t have = data.size() - pos;
      if (have < kFrameHeaderSize) throw DecodeError("frame: truncated header", data.size());
      throw DecodeError("frame: truncated payload", data.size());
    }
    if (st.status == FrameStatus::kSkipped && reports) {
      reports->push_back("skipped frame of unknown kind " + std::to_string(st.raw_kind) + " at offset " +
                         std::to_string(pos));
    }
    if (st.status == FrameStatus::kMessage) out.push_back(std::move(st.message));
    pos += st.consumed;
  }
  return out;
}

WireMessage decode_frame(std::span<const std::uint8_t> data) {
  FrameStatus st = peek_frame(data);
  if (st.status == FrameStatus::kIncomplete) {
    throw DecodeError(data.size() < kFrameHeaderSize ? "frame: truncated header" : "frame: truncated payload",
                      data.size());
  }
  if (st.status == FrameStatus::kSkipped) throw DecodeError("frame: unknown kind " + std::to_string(st.raw_kind), 4);
  if (st.consumed != data.size()) throw DecodeError("frame: trailing bytes", st.consumed);
  return std::move(st.message);
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) {
  if (start_ > 0 && start_ >= buf_.size() / 2) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(start_));
    start_ = 0;
  }
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<WireMessage> FrameReader::next() {
  for (;;) {
    FrameStatus st = peek_frame(std::span<const std::uint8_t>(buf_).subspan(start_), consumed_);
    if (st.status == FrameStatus::kIncomplete) return std::nullopt;
    start_ += st.consumed;
    consumed_ += st.consumed;
    if (st.status == FrameStatus::kMessage) return std::move(st.message);
    if (on_skip) {
      on_skip("skipped frame of unknown kind " + std::to_string(st.raw_kind) + " ending at stream offset " +
              std::to_string(consumed_));
    }
  }
}

// ---------------------------------------------------------------------------

std::uint64_t make_sender_id(Role role, std::uint32_t index, std::uint32_t incarnation) {
  return (static_cast<std::uint64_t>(role) << 56) | (static_cast<std::uint64_t>(index & 0xffffff) << 32) | incarnation;
}

Role sender_role(std::uint64_t sender) { return static_cast<Role>(sender >> 56); }

std::vector<std::uint8_t> encode_payload(const TrajectoryChunk& c) {
  ByteWriter w;
  w.u64(c.episode_id);
  w.u64(c.total_records);
  w.u64(c.records.size());
  for (const auto& r : c.records) write_record(w, r);
  return w.take();
}

TrajectoryChunk decode_trajectory_chunk(std::span<const std::uint8_t> payload) {
  ByteReader in(payload);
  TrajectoryChunk c;
  c.episode_id = in.u64();
  c.total_records = in.u64();
  const std::uint64_t n = read_count(in, 29, "trajectory chunk");
  c.records.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) c.records.push_back(read_record(in));
  require_end(in, "trajectory chunk");
  return c;
}

std::vector<std::uint8_t> encode_payload(const LabeledBatch& b) {
  ByteWriter w;
  w.u64(b.source);
  w.u64(b.episode_id);
  w.u64(b.transitions.size());
  for (const auto& lt : b.transitions) {
    const Transition& t = lt.transition;
    w.u64(lt.step);
    w.f64_vector(t.obs);
    w.f64_vector(t.action);
    w.f64(t.reward);
    w.f64_vector(t.next_obs);
    w.u8(static_cast<std::uint8_t>((t.done ? 1 : 0) | (t.episode_end ? 2 : 0)));
    w.u64(t.timestamp);
  }
  return w.take();
}

LabeledBatch decode_labeled_batch(std::span<const std::uint8_t> payload) {
  ByteReader in(payload);
  LabeledBatch b;
  b.source = in.u64();
  b.episode_id = in.u64();
  const std::uint64_t n = read_count(in, 37, "labeled batch");
  b.transitions.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    LabeledTransition lt;
    lt.step = in.u64();
    Transition& t = lt.transition;
    t.obs = in.f64_vector();
    t.action = in.f64_vector();
    t.reward = in.f64();
    t.next_obs = in.f64_vector();
    const std::size_t at = in.stream_offset();
    const std::uint8_t flags = in.u8();
    if (flags > 3) throw DecodeError("labeled batch: bad flags", at);
    t.done = flags & 1;
    t.episode_end = flags & 2;
    t.timestamp = in.u64();
    b.transitions.push_back(std::move(lt));
  }
  require_end(in, "labeled batch");
  return b;
}

std::vector<std::uint8_t> encode_payload(const CheckpointNotice& n) {
  ByteWriter w;
  w.u64(n.version);
  return w.take();
}

CheckpointNotice decode_checkpoint_notice(std::span<const std::uint8_t> payload) {
  ByteReader in(payload);
  CheckpointNotice n{in.u64()};
  require_end(in, "checkpoint notice");
  return n;
}

std::vector<std::uint8_t> encode_payload(const ClockSync& c) {
  ByteWriter w;
  w.u64(c.epoch);
  return w.take();
}

ClockSync decode_clock_sync(std::span<const std::uint8_t> payload) {
  ByteReader in(payload);
  ClockSync c{in.u64()};
  require_end(in, "clock sync");
  return c;
}

std::vector<TrajectoryChunk> chunk_episode(const Episode& ep, std::size_t max_records) {
  if (max_records == 0) throw std::invalid_argument("chunk_episode: max_records must be positive");
  std::vector<TrajectoryChunk> out;
  for (std::size_t i = 0; i < ep.records.size(); i += max_records) {
    TrajectoryChunk c;
    c.episode_id = ep.id;
    c.total_records = ep.records.size();
    const std::size_t end = std::min(ep.records.size(), i + max_records);
    c.records.assign(ep.records.begin() + static_cast<std::ptrdiff_t>(i), ep.records.begin() + static_cast<std::ptrdiff_t>(end));
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace sacd
