// Copyright 2026 The randstream Authors.
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

// Thin POSIX TCP helpers shared by the transport and control channels.

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace randstream::net {

enum class ChannelErrc {
  kInvalidEndpoint,
  kAddrInUse,
  kConnectTimeout,
  kPeerClosed,
  kBtidMismatch,
  kTimedOut,
  kClosed,
  kIo,
};

const char* to_string(ChannelErrc code);

class ChannelError : public std::runtime_error {
 public:
  ChannelError(ChannelErrc code, const std::string& detail);
  ChannelErrc code() const noexcept { return code_; }

 private:
  ChannelErrc code_;
};

/// tcp://host:port. Port 0 is only meaningful for binding.
struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  /// Throws ChannelError(kInvalidEndpoint); requires a port in [1, 65535].
  static Endpoint parse(const std::string& uri);
  std::string to_string() const;
  bool operator==(const Endpoint&) const = default;
};

/// Owning file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() { close(); }
  Socket(Socket&& o) noexcept : fd_(o.release()) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = o.release();
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() noexcept {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void close() noexcept;
  /// Wakes threads blocked in accept/recv/send on this socket.
  void shutdown() noexcept;

  int send_buffer_size() const;
  int recv_buffer_size() const;

 private:
  int fd_ = -1;
};

struct SocketOptions {
  int send_buffer = 0;  // bytes; 0 keeps the OS default
  int recv_buffer = 0;
};

/// Binds and listens. Throws ChannelError(kAddrInUse) when the port is taken.
Socket listen_tcp(const std::string& host, std::uint16_t port, const SocketOptions& opts = {}, int backlog = 64);
std::uint16_t local_port(const Socket& s);

/// Retries until `timeout` elapses; throws ChannelError(kConnectTimeout).
Socket connect_tcp(const Endpoint& ep, std::chrono::milliseconds timeout, const SocketOptions& opts = {});

/// Blocking accept; returns an invalid socket once the listener is shut down.
Socket accept_tcp(const Socket& listener);

/// Writes everything. Returns false if the peer went away.
bool send_all(const Socket& s, std::span<const std::uint8_t> data);

enum class ReadStatus { kOk, kEof, kError };
/// Blocking read of exactly out.size() bytes.
ReadStatus recv_exact(const Socket& s, std::span<std::uint8_t> out);

/// Waits for readability; false on timeout.
bool wait_readable(const Socket& s, std::chrono::milliseconds timeout);

/// Non-blocking probe: true if the peer closed or reset the connection.
bool peer_closed(const Socket& s);

/// Splits a byte stream into u32-length-prefixed payloads.
class FrameAssembler {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  std::optional<std::vector<std::uint8_t>> next();
  bool has_partial() const { return !buf_.empty(); }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

/// Reads whatever is available without blocking into `fa`. Returns false on EOF or error.
bool drain_available(const Socket& s, FrameAssembler& fa);

}  // namespace randstream::net
