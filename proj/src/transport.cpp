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

#include "sacd/transport.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <utility>

namespace sacd {
namespace {

sockaddr_un make_address(const std::string& path) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.size() >= sizeof(addr.sun_path)) throw std::runtime_error("socket path too long: " + path);
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
  return addr;
}

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  ::fcntl(fd, F_SETFD, FD_CLOEXEC);
}

}  // namespace

Connection::Connection(int fd) : fd_(fd) { set_nonblocking(fd_); }

Connection::~Connection() { close_fd(); }

Connection::Connection(Connection&& o) noexcept
    : fd_(std::exchange(o.fd_, -1)),
      alive_(o.alive_),
      peer_(o.peer_),
      out_(std::move(o.out_)),
      out_start_(std::exchange(o.out_start_, 0)),
      reader_(std::move(o.reader_)) {}

Connection& Connection::operator=(Connection&& o) noexcept {
  if (this != &o) {
    close_fd();
    fd_ = std::exchange(o.fd_, -1);
    alive_ = o.alive_;
    peer_ = o.peer_;
    out_ = std::move(o.out_);
    out_start_ = std::exchange(o.out_start_, 0);
    reader_ = std::move(o.reader_);
  }
  return *this;
}

void Connection::close_fd() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

std::optional<Connection> Connection::connect(const std::string& path) {
  const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd < 0) return std::nullopt;
  const sockaddr_un addr = make_address(path);
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    return std::nullopt;
  }
  return Connection(fd);
}

void Connection::queue(const WireMessage& msg) {
  if (out_start_ > 0 && out_start_ >= out_.size() / 2) {
    out_.erase(out_.begin(), out_.begin() + static_cast<std::ptrdiff_t>(out_start_));
    out_start_ = 0;
  }
  append_frame(out_, msg);
}

bool Connection::flush() {
  while (alive_ && out_start_ < out_.size()) {
    const ssize_t n = ::send(fd_, out_.data() + out_start_, out_.size() - out_start_, MSG_NOSIGNAL | MSG_DONTWAIT);
    if (n > 0) {
      out_start_ += static_cast<std::size_t>(n);
    } else if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
      break;
    } else if (n < 0 && errno == EINTR) {
      continue;
    } else {
      alive_ = false;
    }
  }
  if (out_start_ == out_.size()) {
    out_.clear();
    out_start_ = 0;
  }
  return alive_;
}

bool Connection::receive() {
  std::uint8_t buf[1 << 16];
  while (alive_) {
    const ssize_t n = ::recv(fd_, buf, sizeof(buf), MSG_DONTWAIT);
    if (n > 0) {
      reader_.feed({buf, static_cast<std::size_t>(n)});
    } else if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
      break;
    } else if (n < 0 && errno == EINTR) {
      continue;
    } else {
      alive_ = false;
    }
  }
  return alive_;
}

Listener::Listener(std::string path) : path_(std::move(path)) {
  if (socket_in_use(path_)) throw std::runtime_error("socket already in use: " + path_);
  ::unlink(path_.c_str());
  fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd_ < 0) throw std::runtime_error("socket(): " + std::string(std::strerror(errno)));
  const sockaddr_un addr = make_address(path_);
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd_, 16) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd_);
    throw std::runtime_error("cannot listen on " + path_ + ": " + err);
  }
  set_nonblocking(fd_);
}

Listener::~Listener() {
  if (fd_ >= 0) {
    ::close(fd_);
    ::unlink(path_.c_str());
  }
}

std::optional<Connection> Listener::accept() {
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) return std::nullopt;
  return Connection(fd);
}

bool socket_in_use(const std::string& path) {
  const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd < 0) return false;
  const sockaddr_un addr = make_address(path);
  const bool used = ::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0;
  ::close(fd);
  return used;
}

void poll_entries(std::vector<PollEntry>& entries, int timeout_ms) {
  std::vector<pollfd> fds(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    fds[i].fd = entries[i].fd;
    fds[i].events = static_cast<short>(POLLIN | (entries[i].want_write ? POLLOUT : 0));
  }
  int rc;
  do {
    rc = ::poll(fds.data(), fds.size(), timeout_ms);
  } while (rc < 0 && errno == EINTR);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    entries[i].readable = rc > 0 && (fds[i].revents & POLLIN);
    entries[i].writable = rc > 0 && (fds[i].revents & POLLOUT);
    entries[i].hangup = rc > 0 && (fds[i].revents & (POLLHUP | POLLERR));
  }
}

}  // namespace sacd
