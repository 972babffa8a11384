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

#include "randstream/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

namespace randstream::net {

const char* to_string(ChannelErrc code) {
  switch (code) {
    case ChannelErrc::kInvalidEndpoint: return "InvalidEndpoint";
    case ChannelErrc::kAddrInUse: return "AddrInUse";
    case ChannelErrc::kConnectTimeout: return "ConnectTimeout";
    case ChannelErrc::kPeerClosed: return "PeerClosed";
    case ChannelErrc::kBtidMismatch: return "BtidMismatch";
    case ChannelErrc::kTimedOut: return "TimedOut";
    case ChannelErrc::kClosed: return "Closed";
    case ChannelErrc::kIo: return "Io";
  }
  return "Unknown";
}

ChannelError::ChannelError(ChannelErrc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

Endpoint Endpoint::parse(const std::string& uri) {
  constexpr std::string_view kScheme = "tcp://";
  if (uri.rfind(kScheme, 0) != 0) throw ChannelError(ChannelErrc::kInvalidEndpoint, "expected tcp://host:port, got " + uri);
  const std::string rest = uri.substr(kScheme.size());
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos || colon == 0) throw ChannelError(ChannelErrc::kInvalidEndpoint, "missing host or port in " + uri);
  const std::string port_str = rest.substr(colon + 1);
  std::size_t used = 0;
  long port = 0;
  try {
    port = std::stol(port_str, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != port_str.size() || port < 1 || port > 65535) {
    throw ChannelError(ChannelErrc::kInvalidEndpoint, "port must be in [1, 65535] in " + uri);
  }
  return {rest.substr(0, colon), static_cast<std::uint16_t>(port)};
}

std::string Endpoint::to_string() const { return "tcp://" + host + ":" + std::to_string(port); }

void Socket::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::shutdown() noexcept {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

int Socket::send_buffer_size() const {
  int v = 0;
  socklen_t len = sizeof(v);
  ::getsockopt(fd_, SOL_SOCKET, SO_SNDBUF, &v, &len);
  return v;
}

int Socket::recv_buffer_size() const {
  int v = 0;
  socklen_t len = sizeof(v);
  ::getsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &v, &len);
  return v;
}

namespace {

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;

  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res) {
    throw ChannelError(ChannelErrc::kInvalidEndpoint, "cannot resolve host " + host);
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

void apply_options(int fd, const SocketOptions& opts) {
  if (opts.send_buffer > 0) ::setsockopt(fd, SOL_SOCKET, SO_SNDBUF, &opts.send_buffer, sizeof(int));
  if (opts.recv_buffer > 0) ::setsockopt(fd, SOL_SOCKET, SO_RCVBUF, &opts.recv_buffer, sizeof(int));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

Socket new_tcp_socket() {
  int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw ChannelError(ChannelErrc::kIo, std::string("socket: ") + std::strerror(errno));
  return Socket(fd);
}

}  // namespace

Socket listen_tcp(const std::string& host, std::uint16_t port, const SocketOptions& opts, int backlog) {
  Socket s = new_tcp_socket();
  // Buffer sizes must be set before listen() to be inherited by accepted sockets.
  apply_options(s.fd(), opts);
  const sockaddr_in addr = resolve(host, port);
  if (::bind(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    const int err = errno;
    if (err == EADDRINUSE) {
      throw ChannelError(ChannelErrc::kAddrInUse, host + ":" + std::to_string(port) + " is already bound");
    }
    throw ChannelError(ChannelErrc::kIo, std::string("bind: ") + std::strerror(err));
  }
  if (::listen(s.fd(), backlog) != 0) throw ChannelError(ChannelErrc::kIo, std::string("listen: ") + std::strerror(errno));
  return s;
}

std::uint16_t local_port(const Socket& s) {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) return 0;
  return ntohs(addr.sin_port);
}

Socket connect_tcp(const Endpoint& ep, std::chrono::milliseconds timeout, const SocketOptions& opts) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  const sockaddr_in addr = resolve(ep.host, ep.port);
  std::string last_error = "no attempt";
  while (true) {
    Socket s = new_tcp_socket();
    apply_options(s.fd(), opts);
    if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) return s;
    last_error = std::strerror(errno);
    if (std::chrono::steady_clock::now() >= deadline) break;
    const auto remaining = deadline - std::chrono::steady_clock::now();
    std::this_thread::sleep_for(std::min<std::chrono::steady_clock::duration>(std::chrono::milliseconds(20), remaining));
    if (std::chrono::steady_clock::now() >= deadline) break;
  }
  throw ChannelError(ChannelErrc::kConnectTimeout, ep.to_string() + " (" + last_error + ")");
}

Socket accept_tcp(const Socket& listener) {
  while (true) {
    int fd = ::accept4(listener.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return Socket(fd);
    }
    if (errno == EINTR || errno == ECONNABORTED) continue;
    return Socket();
  }
}

bool send_all(const Socket& s, std::span<const std::uint8_t> data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(s.fd(), data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

ReadStatus recv_exact(const Socket& s, std::span<std::uint8_t> out) {
  std::size_t got = 0;
  while (got < out.size()) {
    const ssize_t n = ::recv(s.fd(), out.data() + got, out.size() - got, 0);
    if (n == 0) return ReadStatus::kEof;
    if (n < 0) {
      if (errno == EINTR) continue;
      return ReadStatus::kError;
    }
    got += static_cast<std::size_t>(n);
  }
  return ReadStatus::kOk;
}

bool wait_readable(const Socket& s, std::chrono::milliseconds timeout) {
  pollfd p{s.fd(), POLLIN, 0};
  const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
  return rc > 0;
}

bool peer_closed(const Socket& s) {
  pollfd p{s.fd(), POLLIN | POLLRDHUP, 0};
  if (::poll(&p, 1, 0) <= 0) return false;
  if (p.revents & (POLLERR | POLLHUP | POLLRDHUP | POLLNVAL)) return true;
  std::uint8_t probe;
  const ssize_t n = ::recv(s.fd(), &probe, 1, MSG_PEEK | MSG_DONTWAIT);
  return n == 0 || (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR);
}

void FrameAssembler::feed(std::span<const std::uint8_t> bytes) {
  if (pos_ > 0 && pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  }
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<std::vector<std::uint8_t>> FrameAssembler::next() {
  if (buf_.size() - pos_ < 4) return std::nullopt;
  std::uint32_t len;
  std::memcpy(&len, buf_.data() + pos_, 4);
  if (buf_.size() - pos_ - 4 < len) return std::nullopt;
  std::vector<std::uint8_t> payload(buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + 4),
                                    buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + 4 + len));
  pos_ += 4 + len;
  if (pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  }
  return payload;
}

bool drain_available(const Socket& s, FrameAssembler& fa) {
  std::uint8_t chunk[16384];
  while (true) {
    const ssize_t n = ::recv(s.fd(), chunk, sizeof(chunk), MSG_DONTWAIT);
    if (n > 0) {
      fa.feed({chunk, static_cast<std::size_t>(n)});
      continue;
    }
    if (n == 0) return false;
    if (errno == EINTR) continue;
    return errno == EAGAIN || errno == EWOULDBLOCK;
  }
}

}  // namespace randstream::net
