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

// Transport between producers and the consumer.
//
// A Publisher owns a bounded send queue drained by a background agent that
// writes DRSM frames to one TCP connection. When the queue is full publish()
// blocks, which is how a slow consumer stalls the producer.
//
// A Distributor accepts any number of publisher connections. Each connection
// has a reader thread feeding a bounded per-connection queue; when the queue
// is full the reader stops reading and TCP flow control pushes back on the
// publisher. Workers pull with next_message(): every accepted message is
// handed to exactly one caller, and connections with pending data are served
// round-robin. There is no ordering guarantee across producers.
//
// Memory bound per producer while the consumer is stalled:
//   send_capacity + queue_capacity + transport_allowance(...)
// where the allowance covers kernel socket buffers and the one decoded
// message a reader may hold while waiting for queue space.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "randstream/net.hpp"
#include "randstream/wire.hpp"

namespace randstream::channel {

using net::ChannelErrc;
using net::ChannelError;
using net::Endpoint;
using Millis = std::chrono::milliseconds;

inline constexpr std::size_t kDefaultCapacity = 10;

struct PublisherConfig {
  Endpoint endpoint;
  std::uint64_t btid = 0;
  std::size_t send_capacity = kDefaultCapacity;
  Millis connect_timeout{30000};
  int socket_send_buffer = 0;  // bytes, 0 = OS default
};

struct PublisherStats {
  std::uint64_t published = 0;    // messages admitted by publish()
  std::uint64_t sent = 0;         // messages fully written to the socket
  std::size_t queue_length = 0;   // admitted but not yet fully written
  std::size_t max_queue_length = 0;
};

class Publisher {
 public:
  /// Throws ChannelError(kConnectTimeout) if no distributor answers in time.
  static Publisher connect(const PublisherConfig& cfg);

  Publisher(Publisher&&) noexcept;
  Publisher& operator=(Publisher&&) noexcept;
  ~Publisher();

  /// Blocks while send_capacity messages are queued. Throws
  /// ChannelError(kBtidMismatch) if m's btid differs from the configured one,
  /// ChannelError(kPeerClosed) once the distributor has gone away, and
  /// wire::WireError(kMissingHeader) without btid/frame.
  void publish(const wire::Message& m);

  /// Waits up to `flush_timeout` for queued messages to be written, then
  /// closes the connection. Idempotent.
  void close(Millis flush_timeout = Millis(5000));

  std::uint64_t btid() const;
  PublisherStats stats() const;
  int socket_send_buffer() const;

 private:
  struct Impl;
  explicit Publisher(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

struct DistributorConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port
  std::size_t queue_capacity = kDefaultCapacity;
  std::size_t worker_count = 1;
  int socket_recv_buffer = 0;  // bytes, 0 = OS default
};

struct DistributorStats {
  std::size_t connections_accepted = 0;
  std::size_t connections_open = 0;
  std::size_t buffered = 0;             // decoded, not yet delivered
  std::size_t max_buffered_per_connection = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped_partial_frames = 0;
  std::uint64_t protocol_errors = 0;
};

class Distributor {
 public:
  /// Throws ChannelError(kAddrInUse) if the port is taken.
  static Distributor bind(const DistributorConfig& cfg);

  Distributor(Distributor&&) noexcept;
  Distributor& operator=(Distributor&&) noexcept;
  ~Distributor();

  Endpoint endpoint() const;
  const DistributorConfig& config() const;

  /// Throws ChannelError(kTimedOut) or ChannelError(kClosed).
  wire::Message next_message(Millis timeout);
  /// nullopt on timeout; throws ChannelError(kClosed).
  std::optional<wire::Message> try_next_message(Millis timeout);
  /// Up to n messages; fewer if `timeout` runs out first. Throws
  /// ChannelError(kClosed) only when closed with nothing collected.
  std::vector<wire::Message> recv_batch(std::size_t n, Millis timeout);

  /// Stops accepting, drops buffered messages and wakes blocked workers.
  void close();

  DistributorStats stats() const;
  /// Largest current SO_RCVBUF among connections (the listener's when none).
  /// Kernel autotuning grows it unless DistributorConfig pins a size.
  int socket_recv_buffer() const;

 private:
  struct Impl;
  explicit Distributor(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// Messages that can be admitted beyond the two bounded queues: everything
/// the kernel send and receive buffers can hold, one frame split across
/// them, and one decoded message held by the connection reader.
std::size_t transport_allowance(std::size_t frame_bytes, std::size_t send_buffer_bytes,
                                std::size_t recv_buffer_bytes);

// ---------------------------------------------------------------------------
// Control channel. The consumer binds a ControlHub; each producer connects a
// ControlClient. Hub sends are broadcast to every connected producer; each
// side polls messages the other side sent, in per-connection order.

inline constexpr const char* kCmdSetClassProbs = "set_class_probs";
inline constexpr const char* kCmdPause = "pause";
inline constexpr const char* kCmdResume = "resume";
inline constexpr const char* kCmdStop = "stop";

/// Requires a `cmd` string; `class_probs`, when present, must be an f32
/// tensor with entries >= 0 summing to 1 +- 1e-6. Throws std::invalid_argument.
void validate_control(const wire::Message& m);

wire::Message make_command(const std::string& cmd);
wire::Message make_set_class_probs(const std::vector<double>& probs);
/// class_probs of a set_class_probs command, as doubles.
std::vector<double> class_probs_of(const wire::Message& m);

class ControlHub {
 public:
  static ControlHub bind(const std::string& host = "127.0.0.1", std::uint16_t port = 0);

  ControlHub(ControlHub&&) noexcept;
  ControlHub& operator=(ControlHub&&) noexcept;
  ~ControlHub();

  Endpoint endpoint() const;
  /// Broadcast; producers whose connection fails are dropped. No-op without
  /// producers. Throws ChannelError(kClosed) after close().
  void send(const wire::Message& m);
  std::optional<wire::Message> poll(Millis timeout);
  std::size_t producer_count() const;
  /// Blocks until at least n producers are connected; false on timeout.
  bool wait_for_producers(std::size_t n, Millis timeout) const;
  void close();

 private:
  struct Impl;
  explicit ControlHub(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

class ControlClient {
 public:
  static ControlClient connect(const Endpoint& ep, Millis timeout = Millis(30000));

  ControlClient(ControlClient&&) noexcept;
  ControlClient& operator=(ControlClient&&) noexcept;
  ~ControlClient();

  /// Throws ChannelError(kPeerClosed) or ChannelError(kClosed).
  void send(const wire::Message& m);
  /// nullopt on timeout. Throws ChannelError(kClosed) once the hub is gone
  /// and every message it sent has been returned.
  std::optional<wire::Message> poll(Millis timeout);
  void close();

 private:
  struct Impl;
  explicit ControlClient(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace randstream::channel
