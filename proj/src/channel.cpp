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

#include "randstream/channel.hpp"

#include <poll.h>

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <iostream>
#include <mutex>
#include <thread>

namespace randstream::channel {

namespace {
using Clock = std::chrono::steady_clock;
constexpr Millis kAgentTick{20};
}  // namespace

// ---------------------------------------------------------------- Publisher

struct Publisher::Impl {
  PublisherConfig cfg;
  net::Socket sock;

  mutable std::mutex mu;
  std::condition_variable not_full;
  std::condition_variable not_empty;
  std::condition_variable drained;
  // The front element is the one being written; it leaves the queue only
  // once fully handed to the kernel.
  std::deque<std::vector<std::uint8_t>> queue;
  bool stopping = false;
  bool peer_gone = false;
  bool closed = false;
  std::uint64_t published = 0;
  std::uint64_t sent = 0;
  std::size_t max_len = 0;
  std::thread agent;

  void fail_locked() {
    peer_gone = true;
    not_full.notify_all();
    drained.notify_all();
  }

  void run() {
    std::unique_lock lk(mu);
    while (true) {
      not_empty.wait_for(lk, kAgentTick, [&] { return stopping || !queue.empty(); });
      if (queue.empty()) {
        if (stopping) return;
        lk.unlock();
        const bool gone = net::peer_closed(sock);
        lk.lock();
        if (gone) {
          fail_locked();
          return;
        }
        continue;
      }
      const std::vector<std::uint8_t>* frame = &queue.front();
      lk.unlock();
      const bool ok = net::send_all(sock, *frame);
      lk.lock();
      if (!ok) {
        fail_locked();
        return;
      }
      queue.pop_front();
      ++sent;
      not_full.notify_one();
      if (queue.empty()) drained.notify_all();
    }
  }
};

Publisher::Publisher(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Publisher::Publisher(Publisher&&) noexcept = default;
Publisher& Publisher::operator=(Publisher&& o) noexcept {
  if (this != &o) {
    if (impl_) close();
    impl_ = std::move(o.impl_);
  }
  return *this;
}
Publisher::~Publisher() {
  if (impl_) close();
}

Publisher Publisher::connect(const PublisherConfig& cfg) {
  if (cfg.send_capacity < 1) throw std::invalid_argument("send_capacity must be >= 1");
  auto impl = std::make_unique<Impl>();
  impl->cfg = cfg;
  impl->sock = net::connect_tcp(cfg.endpoint, cfg.connect_timeout, {cfg.socket_send_buffer, 0});
  impl->agent = std::thread([p = impl.get()] { p->run(); });
  return Publisher(std::move(impl));
}

void Publisher::publish(const wire::Message& m) {
  wire::validate_stream_header(m);
  if (m.u64("btid") != impl_->cfg.btid) {
    throw ChannelError(ChannelErrc::kBtidMismatch, "message btid " + std::to_string(m.u64("btid")) +
                                                       " on publisher " + std::to_string(impl_->cfg.btid));
  }
  auto frame = wire::encode_framed(m);

  Impl& s = *impl_;
  std::unique_lock lk(s.mu);
  s.not_full.wait(lk, [&] { return s.queue.size() < s.cfg.send_capacity || s.peer_gone || s.closed; });
  if (s.closed) throw ChannelError(ChannelErrc::kClosed, "publisher closed");
  if (s.peer_gone) throw ChannelError(ChannelErrc::kPeerClosed, "distributor went away");
  s.queue.push_back(std::move(frame));
  ++s.published;
  s.max_len = std::max(s.max_len, s.queue.size());
  s.not_empty.notify_one();
}

void Publisher::close(Millis flush_timeout) {
  Impl& s = *impl_;
  std::unique_lock lk(s.mu);
  if (s.closed) return;
  s.drained.wait_for(lk, flush_timeout, [&] { return s.queue.empty() || s.peer_gone; });
  s.closed = true;
  s.stopping = true;
  const bool pending = !s.queue.empty();
  s.not_empty.notify_all();
  s.not_full.notify_all();
  lk.unlock();
  if (pending) s.sock.shutdown();
  if (s.agent.joinable()) s.agent.join();
  s.sock.close();
}

std::uint64_t Publisher::btid() const { return impl_->cfg.btid; }

PublisherStats Publisher::stats() const {
  std::lock_guard lk(impl_->mu);
  return {impl_->published, impl_->sent, impl_->queue.size(), impl_->max_len};
}

int Publisher::socket_send_buffer() const { return impl_->sock.send_buffer_size(); }

// -------------------------------------------------------------- Distributor

struct Distributor::Impl {
  struct Conn {
    net::Socket sock;
    std::deque<wire::Message> queue;
    bool eof = false;
    std::thread reader;
  };

  DistributorConfig cfg;
  net::Socket listener;
  Endpoint ep;

  mutable std::mutex mu;
  std::condition_variable data_cv;
  std::condition_variable space_cv;
  std::vector<std::shared_ptr<Conn>> all;
  std::vector<std::shared_ptr<Conn>> active;  // round-robin order
  std::size_t rr = 0;
  bool closed = false;
  DistributorStats st;
  std::thread acceptor;

  void accept_loop() {
    while (true) {
      net::Socket s = net::accept_tcp(listener);
      if (!s.valid()) return;
      std::lock_guard lk(mu);
      if (closed) return;
      auto c = std::make_shared<Conn>();
      c->sock = std::move(s);
      c->reader = std::thread([this, c] { read_loop(*c); });
      all.push_back(c);
      active.push_back(c);
      ++st.connections_accepted;
    }
  }

  void read_loop(Conn& c) {
    while (true) {
      std::uint8_t header[4];
      if (net::recv_exact(c.sock, header) != net::ReadStatus::kOk) break;
      std::uint32_t len;
      std::memcpy(&len, header, 4);
      std::vector<std::uint8_t> payload(len);
      if (net::recv_exact(c.sock, payload) != net::ReadStatus::kOk) {
        std::lock_guard lk(mu);
        ++st.dropped_partial_frames;
        break;
      }
      wire::Message m;
      try {
        m = wire::decode_message(payload);
      } catch (const wire::WireError& e) {
        std::lock_guard lk(mu);
        ++st.protocol_errors;
        std::cerr << "distributor: dropping connection: " << e.what() << '\n';
        break;
      }
      std::unique_lock lk(mu);
      space_cv.wait(lk, [&] { return closed || c.queue.size() < cfg.queue_capacity; });
      if (closed) return;
      c.queue.push_back(std::move(m));
      st.max_buffered_per_connection = std::max(st.max_buffered_per_connection, c.queue.size());
      data_cv.notify_one();
    }
    std::lock_guard lk(mu);
    c.eof = true;
    data_cv.notify_all();
  }

  // Requires mu held.
  std::optional<wire::Message> pop_locked() {
    const std::size_t n = active.size();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t idx = (rr + k) % n;
      Conn& c = *active[idx];
      if (c.queue.empty()) continue;
      wire::Message m = std::move(c.queue.front());
      c.queue.pop_front();
      rr = idx + 1;
      ++st.delivered;
      space_cv.notify_all();
      return m;
    }
    return std::nullopt;
  }

  // Requires mu held. Connections that hit EOF stay until drained.
  void prune_locked() {
    for (std::size_t i = 0; i < active.size();) {
      if (active[i]->eof && active[i]->queue.empty()) {
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(i));
        if (rr > i) --rr;
      } else {
        ++i;
      }
    }
    if (!active.empty()) rr %= active.size();
    else rr = 0;
  }

  std::optional<wire::Message> pop(Millis timeout) {
    const auto deadline = Clock::now() + timeout;
    std::unique_lock lk(mu);
    while (true) {
      if (closed) throw ChannelError(ChannelErrc::kClosed, "distributor closed");
      prune_locked();
      if (auto m = pop_locked()) return m;
      if (data_cv.wait_until(lk, deadline) == std::cv_status::timeout) {
        if (closed) throw ChannelError(ChannelErrc::kClosed, "distributor closed");
        prune_locked();
        return pop_locked();
      }
    }
  }

  void close() {
    {
      std::lock_guard lk(mu);
      if (closed) return;
      closed = true;
      for (auto& c : all) c->queue.clear();
      data_cv.notify_all();
      space_cv.notify_all();
      for (auto& c : all) c->sock.shutdown();
    }
    listener.shutdown();
    if (acceptor.joinable()) acceptor.join();
    // The acceptor is gone, so `all` no longer grows.
    for (auto& c : all) {
      if (c->reader.joinable()) c->reader.join();
      std::lock_guard lk(mu);
      c->sock.close();
    }
    std::lock_guard lk(mu);
    listener.close();
  }
};

Distributor::Distributor(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Distributor::Distributor(Distributor&&) noexcept = default;
Distributor& Distributor::operator=(Distributor&& o) noexcept {
  if (this != &o) {
    if (impl_) impl_->close();
    impl_ = std::move(o.impl_);
  }
  return *this;
}
Distributor::~Distributor() {
  if (impl_) impl_->close();
}

Distributor Distributor::bind(const DistributorConfig& cfg) {
  if (cfg.queue_capacity < 1) throw std::invalid_argument("queue_capacity must be >= 1");
  if (cfg.worker_count < 1) throw std::invalid_argument("worker_count must be >= 1");
  auto impl = std::make_unique<Impl>();
  impl->cfg = cfg;
  impl->listener = net::listen_tcp(cfg.host, cfg.port, {0, cfg.socket_recv_buffer});
  impl->ep = {cfg.host, net::local_port(impl->listener)};
  impl->acceptor = std::thread([p = impl.get()] { p->accept_loop(); });
  return Distributor(std::move(impl));
}

Endpoint Distributor::endpoint() const { return impl_->ep; }
const DistributorConfig& Distributor::config() const { return impl_->cfg; }

wire::Message Distributor::next_message(Millis timeout) {
  auto m = impl_->pop(timeout);
  if (!m) throw ChannelError(ChannelErrc::kTimedOut, "no message within " + std::to_string(timeout.count()) + " ms");
  return std::move(*m);
}

std::optional<wire::Message> Distributor::try_next_message(Millis timeout) { return impl_->pop(timeout); }

std::vector<wire::Message> Distributor::recv_batch(std::size_t n, Millis timeout) {
  std::vector<wire::Message> out;
  if (n == 0) return out;
  out.reserve(n);
  const auto deadline = Clock::now() + timeout;
  while (out.size() < n) {
    const auto remaining = std::max(Millis(0), std::chrono::duration_cast<Millis>(deadline - Clock::now()));
    std::optional<wire::Message> m;
    try {
      m = impl_->pop(remaining);
    } catch (const ChannelError&) {
      if (out.empty()) throw;
      break;
    }
    if (!m) break;
    out.push_back(std::move(*m));
  }
  return out;
}

void Distributor::close() { impl_->close(); }

DistributorStats Distributor::stats() const {
  std::lock_guard lk(impl_->mu);
  DistributorStats s = impl_->st;
  s.connections_open = 0;
  s.buffered = 0;
  for (const auto& c : impl_->all) {
    if (!c->eof) ++s.connections_open;
    s.buffered += c->queue.size();
  }
  return s;
}

int Distributor::socket_recv_buffer() const {
  std::lock_guard lk(impl_->mu);
  if (!impl_->listener.valid()) return 0;
  int best = impl_->listener.recv_buffer_size();
  for (const auto& c : impl_->all) {
    if (c->sock.valid()) best = std::max(best, c->sock.recv_buffer_size());
  }
  return best;
}

std::size_t transport_allowance(std::size_t frame_bytes, std::size_t send_buffer_bytes,
                                std::size_t recv_buffer_bytes) {
  frame_bytes = std::max<std::size_t>(frame_bytes, 1);
  const std::size_t kernel = send_buffer_bytes + recv_buffer_bytes;
  return (kernel + frame_bytes - 1) / frame_bytes + 2;
}

// ---------------------------------------------------------- control channel

void validate_control(const wire::Message& m) {
  if (!m.get_if<std::string>("cmd")) throw std::invalid_argument("control message requires a 'cmd' string");
  if (const wire::Value* v = m.find("class_probs")) {
    const auto* t = std::get_if<wire::Tensor>(v);
    if (!t || t->dtype != wire::DType::kF32) throw std::invalid_argument("class_probs must be an f32 tensor");
    double sum = 0;
    for (float p : t->as_f32()) {
      if (!(p >= 0) || !std::isfinite(p)) throw std::invalid_argument("class_probs entries must be >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw std::invalid_argument("class_probs must sum to 1");
  }
}

wire::Message make_command(const std::string& cmd) {
  wire::Message m;
  m.append("cmd", cmd);
  return m;
}

wire::Message make_set_class_probs(const std::vector<double>& probs) {
  std::vector<float> f(probs.begin(), probs.end());
  wire::Message m = make_command(kCmdSetClassProbs);
  m.append("class_probs", wire::Tensor::f32({static_cast<std::uint32_t>(f.size())}, f));
  validate_control(m);
  return m;
}

std::vector<double> class_probs_of(const wire::Message& m) {
  const auto f = m.tensor("class_probs").as_f32();
  return {f.begin(), f.end()};
}

namespace {

// Drains readable bytes of one peer into `inbox`. False once the peer is gone.
bool pump(const net::Socket& sock, net::FrameAssembler& fa, std::deque<wire::Message>& inbox) {
  const bool alive = net::drain_available(sock, fa);
  while (auto payload = fa.next()) {
    try {
      inbox.push_back(wire::decode_message(*payload));
    } catch (const wire::WireError& e) {
      std::cerr << "control: dropping connection: " << e.what() << '\n';
      return false;
    }
  }
  return alive;
}

}  // namespace

struct ControlHub::Impl {
  struct Peer {
    net::Socket sock;
    net::FrameAssembler fa;
    bool dead = false;
  };

  net::Socket listener;
  Endpoint ep;
  mutable std::mutex mu;
  mutable std::condition_variable peer_cv;
  std::vector<std::shared_ptr<Peer>> peers;
  std::deque<wire::Message> inbox;
  std::mutex send_mu;
  bool closed = false;
  std::thread acceptor;

  void accept_loop() {
    while (true) {
      net::Socket s = net::accept_tcp(listener);
      if (!s.valid()) return;
      std::lock_guard lk(mu);
      if (closed) return;
      auto p = std::make_shared<Peer>();
      p->sock = std::move(s);
      peers.push_back(std::move(p));
      peer_cv.notify_all();
    }
  }

  void close() {
    {
      std::lock_guard lk(mu);
      if (closed) return;
      closed = true;
      for (auto& p : peers) p->sock.shutdown();
      peer_cv.notify_all();
    }
    listener.shutdown();
    if (acceptor.joinable()) acceptor.join();
    std::lock_guard lk(mu);
    peers.clear();
    listener.close();
  }
};

ControlHub::ControlHub(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
ControlHub::ControlHub(ControlHub&&) noexcept = default;
ControlHub& ControlHub::operator=(ControlHub&& o) noexcept {
  if (this != &o) {
    if (impl_) impl_->close();
    impl_ = std::move(o.impl_);
  }
  return *this;
}
ControlHub::~ControlHub() {
  if (impl_) impl_->close();
}

ControlHub ControlHub::bind(const std::string& host, std::uint16_t port) {
  auto impl = std::make_unique<Impl>();
  impl->listener = net::listen_tcp(host, port);
  impl->ep = {host, net::local_port(impl->listener)};
  impl->acceptor = std::thread([p = impl.get()] { p->accept_loop(); });
  return ControlHub(std::move(impl));
}

Endpoint ControlHub::endpoint() const { return impl_->ep; }

void ControlHub::send(const wire::Message& m) {
  const auto frame = wire::encode_framed(m);
  std::vector<std::shared_ptr<Impl::Peer>> targets;
  {
    std::lock_guard lk(impl_->mu);
    if (impl_->closed) throw ChannelError(ChannelErrc::kClosed, "control hub closed");
    targets = impl_->peers;
  }
  std::lock_guard send_lk(impl_->send_mu);
  bool any_dead = false;
  for (auto& p : targets) {
    if (!net::send_all(p->sock, frame)) {
      p->dead = true;
      any_dead = true;
    }
  }
  if (any_dead) {
    std::lock_guard lk(impl_->mu);
    std::erase_if(impl_->peers, [](const auto& p) { return p->dead; });
  }
}

std::optional<wire::Message> ControlHub::poll(Millis timeout) {
  const auto deadline = Clock::now() + timeout;
  while (true) {
    std::vector<std::shared_ptr<Impl::Peer>> snapshot;
    {
      std::unique_lock lk(impl_->mu);
      if (!impl_->inbox.empty()) {
        auto m = std::move(impl_->inbox.front());
        impl_->inbox.pop_front();
        return m;
      }
      if (impl_->closed) throw ChannelError(ChannelErrc::kClosed, "control hub closed");
      if (impl_->peers.empty()) {
        if (!impl_->peer_cv.wait_until(lk, deadline, [&] { return impl_->closed || !impl_->peers.empty(); })) {
          return std::nullopt;
        }
        continue;
      }
      snapshot = impl_->peers;
    }

    std::vector<pollfd> fds;
    for (const auto& p : snapshot) fds.push_back({p->sock.fd(), POLLIN, 0});
    const auto remaining = std::chrono::duration_cast<Millis>(deadline - Clock::now());
    // Short slices pick up producers that connect while we wait.
    const int wait_ms = static_cast<int>(std::clamp<long long>(remaining.count(), 0, 50));
    ::poll(fds.data(), fds.size(), wait_ms);

    std::deque<wire::Message> got;
    bool any_dead = false;
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (fds[i].revents == 0) continue;
      if (!pump(snapshot[i]->sock, snapshot[i]->fa, got)) {
        snapshot[i]->dead = true;
        any_dead = true;
      }
    }
    {
      std::lock_guard lk(impl_->mu);
      for (auto& m : got) impl_->inbox.push_back(std::move(m));
      if (any_dead) std::erase_if(impl_->peers, [](const auto& p) { return p->dead; });
      if (!impl_->inbox.empty()) {
        auto m = std::move(impl_->inbox.front());
        impl_->inbox.pop_front();
        return m;
      }
    }
    if (Clock::now() >= deadline) return std::nullopt;
  }
}

std::size_t ControlHub::producer_count() const {
  std::lock_guard lk(impl_->mu);
  return impl_->peers.size();
}

bool ControlHub::wait_for_producers(std::size_t n, Millis timeout) const {
  std::unique_lock lk(impl_->mu);
  return impl_->peer_cv.wait_for(lk, timeout, [&] { return impl_->closed || impl_->peers.size() >= n; }) &&
         impl_->peers.size() >= n;
}

void ControlHub::close() { impl_->close(); }

struct ControlClient::Impl {
  net::Socket sock;
  net::FrameAssembler fa;
  std::deque<wire::Message> inbox;
  bool eof = false;
  bool closed = false;
  std::mutex send_mu;
};

ControlClient::ControlClient(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
ControlClient::ControlClient(ControlClient&&) noexcept = default;
ControlClient& ControlClient::operator=(ControlClient&&) noexcept = default;
ControlClient::~ControlClient() = default;

ControlClient ControlClient::connect(const Endpoint& ep, Millis timeout) {
  auto impl = std::make_unique<Impl>();
  impl->sock = net::connect_tcp(ep, timeout);
  return ControlClient(std::move(impl));
}

void ControlClient::send(const wire::Message& m) {
  std::lock_guard lk(impl_->send_mu);
  if (impl_->closed) throw ChannelError(ChannelErrc::kClosed, "control client closed");
  if (!net::send_all(impl_->sock, wire::encode_framed(m))) {
    throw ChannelError(ChannelErrc::kPeerClosed, "control hub went away");
  }
}

std::optional<wire::Message> ControlClient::poll(Millis timeout) {
  Impl& s = *impl_;
  if (s.closed) throw ChannelError(ChannelErrc::kClosed, "control client closed");
  const auto deadline = Clock::now() + timeout;
  while (true) {
    if (!s.inbox.empty()) {
      auto m = std::move(s.inbox.front());
      s.inbox.pop_front();
      return m;
    }
    if (s.eof) throw ChannelError(ChannelErrc::kClosed, "control hub closed the connection");
    const auto remaining = std::max(Millis(0), std::chrono::duration_cast<Millis>(deadline - Clock::now()));
    if (net::wait_readable(s.sock, remaining)) {
      if (!pump(s.sock, s.fa, s.inbox)) s.eof = true;
      continue;
    }
    if (Clock::now() >= deadline) return std::nullopt;
  }
}

void ControlClient::close() {
  if (!impl_) return;
  impl_->closed = true;
  impl_->sock.close();
}

}  // namespace randstream::channel
