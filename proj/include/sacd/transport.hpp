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
#include <optional>
#include <string>
#include <vector>

#include "sacd/wire.hpp"

namespace sacd {

// Stream socket carrying wire frames. Reads and writes never block; frames
// queue until the peer can take them.
class Connection {
 public:
  explicit Connection(int fd);
  ~Connection();
  Connection(Connection&& other) noexcept;
  Connection& operator=(Connection&& other) noexcept;
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  // Connects to a listening socket; empty if nobody listens.
  static std::optional<Connection> connect(const std::string& path);

  void queue(const WireMessage& msg);
  // Writes as much queued output as the socket takes. False once the peer
  // is gone.
  bool flush();
  // Reads whatever is available. False on end of stream or error.
  bool receive();
  std::optional<WireMessage> next() { return reader_.next(); }

  int fd() const { return fd_; }
  bool open() const { return fd_ >= 0 && alive_; }
  std::size_t pending_output() const { return out_.size() - out_start_; }
  std::uint64_t peer() const { return peer_; }
  void set_peer(std::uint64_t id) { peer_ = id; }
  FrameReader& reader() { return reader_; }

 private:
  void close_fd();

  int fd_ = -1;
  bool alive_ = true;
  std::uint64_t peer_ = 0;
  std::vector<std::uint8_t> out_;
  std::size_t out_start_ = 0;
  FrameReader reader_;
};

class Listener {
 public:
  // Binds `path`, replacing a stale socket file. Throws std::runtime_error
  // if another process is already listening there.
  explicit Listener(std::string path);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  std::optional<Connection> accept();
  int fd() const { return fd_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  int fd_ = -1;
};

// True if something accepts connections at `path`.
bool socket_in_use(const std::string& path);

struct PollEntry {
  int fd = -1;
  bool want_write = false;
  bool readable = false;
  bool writable = false;
  bool hangup = false;
};

// Waits up to `timeout_ms` for any entry to become ready.
void poll_entries(std::vector<PollEntry>& entries, int timeout_ms);

}  // namespace sacd
