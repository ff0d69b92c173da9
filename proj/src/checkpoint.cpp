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

#include "sacd/checkpoint.hpp"

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace sacd {
namespace {

void write_rng(ByteWriter& out, const std::vector<std::uint64_t>& words) {
  out.u64(words.size());
  for (auto w : words) out.u64(w);
}

std::vector<std::uint64_t> read_rng(ByteReader& in) {
  const std::size_t offset = in.stream_offset();
  const std::uint64_t n = in.u64();
  if (n > in.remaining() / 8) throw DecodeError("checkpoint: rng state length exceeds data", offset);
  std::vector<std::uint64_t> words(n);
  for (auto& w : words) w = in.u64();
  return words;
}

void write_head(ByteWriter& out, const Checkpoint& c) {
  out.bytes({reinterpret_cast<const std::uint8_t*>(kCheckpointMagic), 4});
  out.u32(kCheckpointFormat);
  out.u64(c.config_hash);
  out.u64(c.counters.version);
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& c) {
  ByteWriter out;
  write_head(out, c);
  out.u64(c.counters.env_steps);
  out.u64(c.counters.grad_steps);
  out.u64(c.counters.episodes);
  out.u64(c.counters.next_eval_step);
  out.u64(c.counters.next_publish_step);

  const SacAgent& a = c.agent;
  write_network(out, a.policy.net);
  out.u64(a.policy.action_dim);
  out.f64(a.policy.log_std_min);
  out.f64(a.policy.log_std_max);
  write_network(out, a.critics.q1);
  write_network(out, a.critics.q2);
  write_network(out, a.critics.target1);
  write_network(out, a.critics.target2);
  out.f64(a.critics.tau);
  out.f64(a.temperature.log_alpha);
  out.f64(a.temperature.target_entropy);
  out.u64(static_cast<std::uint64_t>(a.temperature.mode));
  out.f64(a.gamma);
  out.u64(a.fixed_alpha ? 1 : 0);
  out.f64(a.fixed_alpha.value_or(0.0));
  write_adam(out, a.policy_adam);
  write_adam(out, a.q1_adam);
  write_adam(out, a.q2_adam);
  write_adam(out, a.temperature.adam);
  write_rng(out, c.sample_rng);
  write_rng(out, c.noise_rng);
  return out.take();
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  const auto magic = in.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kCheckpointMagic)) throw DecodeError("checkpoint: bad magic", 0);
  const std::uint32_t format = in.u32();
  if (format != kCheckpointFormat) {
    throw DecodeError("checkpoint: unsupported format version " + std::to_string(format), 4);
  }
  Checkpoint c;
  c.config_hash = in.u64();
  c.counters.version = in.u64();
  c.counters.env_steps = in.u64();
  c.counters.grad_steps = in.u64();
  c.counters.episodes = in.u64();
  c.counters.next_eval_step = in.u64();
  c.counters.next_publish_step = in.u64();

  SacAgent& a = c.agent;
  a.policy.net = read_network(in);
  a.policy.action_dim = in.u64();
  a.policy.log_std_min = in.f64();
  a.policy.log_std_max = in.f64();
  if (a.policy.net.output_dim() != 2 * a.policy.action_dim) {
    throw DecodeError("checkpoint: policy output width does not match action dimension", in.stream_offset());
  }
  a.critics.q1 = read_network(in);
  a.critics.q2 = read_network(in);
  a.critics.target1 = read_network(in);
  a.critics.target2 = read_network(in);
  a.critics.tau = in.f64();
  a.temperature.log_alpha = in.f64();
  a.temperature.target_entropy = in.f64();
  const std::size_t mode_offset = in.stream_offset();
  const std::uint64_t mode = in.u64();
  if (mode > 1) throw DecodeError("checkpoint: bad temperature mode", mode_offset);
  a.temperature.mode = static_cast<TemperatureMode>(mode);
  a.gamma = in.f64();
  const bool has_fixed = in.u64() != 0;
  const double fixed = in.f64();
  if (has_fixed) a.fixed_alpha = fixed;
  a.policy_adam = read_adam(in);
  a.q1_adam = read_adam(in);
  a.q2_adam = read_adam(in);
  a.temperature.adam = read_adam(in);
  c.sample_rng = read_rng(in);
  c.noise_rng = read_rng(in);
  if (!in.at_end()) throw DecodeError("checkpoint: trailing bytes", in.stream_offset());
  return c;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    const bool ok = std::fwrite(bytes.data(), 1, bytes.size(), f) == bytes.size() && std::fflush(f) == 0 &&
                    ::fsync(::fileno(f)) == 0;
    std::fclose(f);
    if (!ok) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

void write_checkpoint_file(const std::filesystem::path& dir, const Checkpoint& ckpt) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / kCheckpointFile, serialize_checkpoint(ckpt));
}

std::optional<Checkpoint> read_checkpoint_file(const std::filesystem::path& dir) {
  const auto path = dir / kCheckpointFile;
  if (!std::filesystem::exists(path)) return std::nullopt;
  const auto bytes = read_file_bytes(path);
  return parse_checkpoint(bytes);
}

std::optional<std::uint64_t> peek_checkpoint_version(const std::filesystem::path& dir) {
  std::ifstream f(dir / kCheckpointFile, std::ios::binary);
  if (!f) return std::nullopt;
  std::uint8_t head[24];
  if (!f.read(reinterpret_cast<char*>(head), sizeof(head))) return std::nullopt;
  ByteReader in(head);
  const auto magic = in.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kCheckpointMagic) || in.u32() != kCheckpointFormat) return std::nullopt;
  in.u64();
  return in.u64();
}

}  // namespace sacd
