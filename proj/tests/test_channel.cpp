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

#include <doctest.h>

#include <atomic>
#include <functional>
#include <map>
#include <set>
#include <thread>

#include "randstream/channel.hpp"

using namespace randstream;
using namespace randstream::channel;
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

namespace {

wire::Message frame_msg(std::uint64_t btid, std::uint64_t frame, std::size_t payload = 16) {
  wire::Message m;
  m.append("btid", btid);
  m.append("frame", frame);
  m.append("data", wire::Blob{std::vector<std::uint8_t>(payload, static_cast<std::uint8_t>(frame))});
  return m;
}

ChannelErrc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ChannelError& e) {
    return e.code();
  }
  FAIL("no ChannelError thrown");
  return ChannelErrc::kIo;
}

Publisher connect_pub(const Distributor& d, std::uint64_t btid, std::size_t cap = kDefaultCapacity) {
  PublisherConfig pc;
  pc.endpoint = d.endpoint();
  pc.btid = btid;
  pc.send_capacity = cap;
  return Publisher::connect(pc);
}

}  // namespace

TEST_SUITE("channel") {
  TEST_CASE("endpoint uris") {
    const Endpoint ep = Endpoint::parse("tcp://127.0.0.1:5555");
    CHECK(ep.host == "127.0.0.1");
    CHECK(ep.port == 5555);
    CHECK(ep.to_string() == "tcp://127.0.0.1:5555");
    for (const char* bad : {"127.0.0.1:5555", "tcp://127.0.0.1", "tcp://:80", "tcp://h:0", "tcp://h:70000", "tcp://h:x"}) {
      CAPTURE(bad);
      CHECK(code_of([&] { Endpoint::parse(bad); }) == ChannelErrc::kInvalidEndpoint);
    }
  }

  TEST_CASE("connecting to nobody times out") {
    std::uint16_t port;
    {
      auto d = Distributor::bind({});
      port = d.endpoint().port;
    }
    PublisherConfig pc;
    pc.endpoint = {"127.0.0.1", port};
    pc.connect_timeout = 200ms;
    const auto t0 = Clock::now();
    CHECK(code_of([&] { Publisher::connect(pc); }) == ChannelErrc::kConnectTimeout);
    CHECK(Clock::now() - t0 >= 200ms);
  }

  TEST_CASE("binding a taken port fails") {
    auto d = Distributor::bind({});
    DistributorConfig dc;
    dc.port = d.endpoint().port;
    CHECK(code_of([&] { Distributor::bind(dc); }) == ChannelErrc::kAddrInUse);
    CHECK(code_of([&] { ControlHub::bind("127.0.0.1", d.endpoint().port); }) == ChannelErrc::kAddrInUse);
  }

  TEST_CASE("waiting without producers times out, closing wakes workers") {
    auto d = Distributor::bind({});
    CHECK(code_of([&] { d.next_message(50ms); }) == ChannelErrc::kTimedOut);
    CHECK_FALSE(d.try_next_message(10ms).has_value());

    std::atomic<int> woke{0};
    std::thread worker([&] {
      if (code_of([&] { d.next_message(10s); }) == ChannelErrc::kClosed) woke = 1;
    });
    std::this_thread::sleep_for(50ms);
    const auto t0 = Clock::now();
    d.close();
    worker.join();
    CHECK(woke == 1);
    CHECK(Clock::now() - t0 < 2s);
    CHECK(code_of([&] { d.next_message(10ms); }) == ChannelErrc::kClosed);
  }

  TEST_CASE("every message is delivered exactly once") {
    DistributorConfig dc;
    dc.worker_count = 2;
    auto d = Distributor::bind(dc);
    constexpr std::uint64_t kProducers = 3, kFrames = 300;
    std::vector<std::thread> producers;
    for (std::uint64_t b = 0; b < kProducers; ++b) {
      producers.emplace_back([&, b] {
        auto pub = connect_pub(d, b);
        for (std::uint64_t f = 0; f < kFrames; ++f) pub.publish(frame_msg(b, f));
        pub.close();
      });
    }
    std::mutex mu;
    std::multiset<std::pair<std::uint64_t, std::uint64_t>> seen;
    std::atomic<std::uint64_t> count{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < 2; ++w) {
      workers.emplace_back([&] {
        while (count.load() < kProducers * kFrames) {
          auto m = d.try_next_message(100ms);
          if (!m) continue;
          ++count;
          std::lock_guard lk(mu);
          seen.insert({m->u64("btid"), m->u64("frame")});
        }
      });
    }
    for (auto& t : producers) t.join();
    for (auto& t : workers) t.join();
    CHECK(seen.size() == kProducers * kFrames);
    const std::set<std::pair<std::uint64_t, std::uint64_t>> unique(seen.begin(), seen.end());
    CHECK(unique.size() == kProducers * kFrames);
    CHECK_FALSE(d.try_next_message(50ms).has_value());
  }

  TEST_CASE("each producer's messages arrive in order") {
    auto d = Distributor::bind({});
    std::thread producer([&] {
      auto a = connect_pub(d, 0);
      auto b = connect_pub(d, 1);
      for (std::uint64_t f = 0; f < 200; ++f) {
        a.publish(frame_msg(0, f));
        b.publish(frame_msg(1, f));
      }
      a.close();
      b.close();
    });
    std::map<std::uint64_t, std::uint64_t> next;
    for (int i = 0; i < 400; ++i) {
      const auto m = d.next_message(10s);
      const auto btid = m.u64("btid");
      REQUIRE(m.u64("frame") == next[btid]);
      ++next[btid];
    }
    producer.join();
  }

  TEST_CASE("saturating producers get equal shares") {
    auto d = Distributor::bind({});
    std::atomic<bool> stop{false};
    std::vector<std::thread> producers;
    for (std::uint64_t b = 0; b < 2; ++b) {
      producers.emplace_back([&, b] {
        auto pub = connect_pub(d, b);
        try {
          for (std::uint64_t f = 0; !stop.load(); ++f) pub.publish(frame_msg(b, f));
        } catch (const ChannelError&) {
        }
      });
    }
    // Let both connections fill their queues.
    while (d.stats().connections_open < 2) std::this_thread::sleep_for(5ms);
    std::this_thread::sleep_for(300ms);
    std::map<std::uint64_t, int> share;
    for (int i = 0; i < 100; ++i) {
      share[d.next_message(10s).u64("btid")]++;
      std::this_thread::sleep_for(1ms);
    }
    CAPTURE(share[0]);
    CHECK(share[0] >= 40);
    CHECK(share[0] <= 60);
    CHECK(share[0] + share[1] == 100);
    stop = true;
    d.close();
    for (auto& t : producers) t.join();
  }

  TEST_CASE("a stalled consumer blocks the publisher with bounded buffering") {
    DistributorConfig dc;
    dc.queue_capacity = 10;
    auto d = Distributor::bind(dc);
    PublisherConfig pc;
    pc.endpoint = d.endpoint();
    pc.btid = 4;
    pc.send_capacity = 10;
    auto pub = Publisher::connect(pc);
    constexpr std::uint64_t kTotal = 20000;
    constexpr std::size_t kPayload = 4096;
    std::atomic<std::uint64_t> published{0};
    std::thread producer([&] {
      for (std::uint64_t f = 0; f < kTotal; ++f) {
        pub.publish(frame_msg(4, f, kPayload));
        published = f + 1;
      }
    });
    std::this_thread::sleep_for(1s);
    const std::uint64_t stalled_at = published.load();
    std::this_thread::sleep_for(500ms);
    CHECK(published.load() == stalled_at);
    CHECK(stalled_at < kTotal);

    const auto ps = pub.stats();
    const auto ds = d.stats();
    const std::size_t frame_bytes = wire::encode_framed(frame_msg(4, 0, kPayload)).size();
    const std::size_t bound = pc.send_capacity + dc.queue_capacity +
                              transport_allowance(frame_bytes, static_cast<std::size_t>(pub.socket_send_buffer()),
                                                  static_cast<std::size_t>(d.socket_recv_buffer()));
    CAPTURE(ps.published);
    CAPTURE(bound);
    CHECK(ds.delivered == 0);
    CHECK(ds.max_buffered_per_connection <= dc.queue_capacity);
    CHECK(ps.max_queue_length <= pc.send_capacity);
    CHECK(ps.published - ds.delivered <= bound);

    std::uint64_t got = 0;
    while (got < kTotal) {
      const auto m = d.next_message(10s);
      REQUIRE(m.u64("frame") == got);
      ++got;
    }
    producer.join();
  }

  TEST_CASE("publishing after the distributor is gone fails with PeerClosed") {
    auto d = Distributor::bind({});
    auto pub = connect_pub(d, 0);
    pub.publish(frame_msg(0, 0));
    d.close();
    const auto deadline = Clock::now() + 5s;
    ChannelErrc code = ChannelErrc::kIo;
    for (std::uint64_t f = 1; Clock::now() < deadline; ++f) {
      try {
        pub.publish(frame_msg(0, f));
        std::this_thread::sleep_for(10ms);
      } catch (const ChannelError& e) {
        code = e.code();
        break;
      }
    }
    CHECK(code == ChannelErrc::kPeerClosed);
  }

  TEST_CASE("publish validates the stream header") {
    auto d = Distributor::bind({});
    auto pub = connect_pub(d, 2);
    CHECK(code_of([&] { pub.publish(frame_msg(3, 0)); }) == ChannelErrc::kBtidMismatch);
    wire::Message headless;
    headless.append("x", std::uint64_t{1});
    CHECK_THROWS_AS(pub.publish(headless), wire::WireError);
    CHECK(pub.btid() == 2);
  }

  TEST_CASE("recv_batch returns what arrives in time") {
    auto d = Distributor::bind({});
    auto pub = connect_pub(d, 0);
    for (std::uint64_t f = 0; f < 5; ++f) pub.publish(frame_msg(0, f));
    pub.close();
    CHECK(d.recv_batch(0, 100ms).empty());
    auto first = d.recv_batch(3, 5s);
    CHECK(first.size() == 3);
    const auto t0 = Clock::now();
    auto rest = d.recv_batch(10, 200ms);
    CHECK(rest.size() == 2);
    CHECK(Clock::now() - t0 >= 190ms);
    d.close();
    CHECK(code_of([&] { d.recv_batch(1, 10ms); }) == ChannelErrc::kClosed);
  }

  TEST_CASE("disconnects keep complete messages and drop partial frames") {
    auto d = Distributor::bind({});
    {
      auto pub = connect_pub(d, 0);
      for (std::uint64_t f = 0; f < 5; ++f) pub.publish(frame_msg(0, f));
      pub.close();
    }
    for (std::uint64_t f = 0; f < 5; ++f) CHECK(d.next_message(5s).u64("frame") == f);

    {
      auto raw = net::connect_tcp(d.endpoint(), 5s);
      const auto frame = wire::encode_framed(frame_msg(1, 0));
      net::send_all(raw, std::span(frame).first(frame.size() - 3));
    }
    {
      auto raw = net::connect_tcp(d.endpoint(), 5s);
      const std::vector<std::uint8_t> garbage{5, 0, 0, 0, 'n', 'o', 'p', 'e', '!'};
      net::send_all(raw, garbage);
    }
    const auto deadline = Clock::now() + 5s;
    while (Clock::now() < deadline) {
      const auto s = d.stats();
      if (s.dropped_partial_frames == 1 && s.protocol_errors == 1) break;
      std::this_thread::sleep_for(10ms);
    }
    CHECK(d.stats().dropped_partial_frames == 1);
    CHECK(d.stats().protocol_errors == 1);
    CHECK_FALSE(d.try_next_message(50ms).has_value());
  }

  TEST_CASE("transport allowance") {
    CHECK(transport_allowance(1000, 4000, 6000) == 12);
    CHECK(transport_allowance(1000, 4001, 6000) == 13);
    CHECK(transport_allowance(0, 0, 0) == 2);
  }

  TEST_CASE("control commands") {
    const auto m = make_set_class_probs({0.25, 0.25, 0.5});
    CHECK(m.str("cmd") == "set_class_probs");
    CHECK(class_probs_of(m) == std::vector<double>{0.25, 0.25, 0.5});
    CHECK_THROWS_AS(make_set_class_probs({0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(make_set_class_probs({1.5, -0.5}), std::invalid_argument);
    CHECK_THROWS_AS(validate_control(wire::Message{}), std::invalid_argument);
    wire::Message wrong = make_command(kCmdSetClassProbs);
    wrong.append("class_probs", wire::Tensor::i64({1}, std::vector<std::int64_t>{1}));
    CHECK_THROWS_AS(validate_control(wrong), std::invalid_argument);
    CHECK_NOTHROW(validate_control(make_command(kCmdPause)));
  }

  TEST_CASE("control hub broadcasts in order and hears producers") {
    auto hub = ControlHub::bind();
    CHECK_NOTHROW(hub.send(make_command(kCmdPause)));  // nobody listening
    auto a = ControlClient::connect(hub.endpoint());
    auto b = ControlClient::connect(hub.endpoint());
    REQUIRE(hub.wait_for_producers(2, 5s));
    CHECK(hub.producer_count() == 2);
    hub.send(make_command(kCmdPause));
    hub.send(make_set_class_probs({0.5, 0.5}));
    hub.send(make_command(kCmdResume));
    for (auto* c : {&a, &b}) {
      std::vector<std::string> cmds;
      while (cmds.size() < 3) {
        auto m = c->poll(5s);
        REQUIRE(m);
        cmds.push_back(m->str("cmd"));
      }
      CHECK(cmds == std::vector<std::string>{"pause", "set_class_probs", "resume"});
      CHECK_FALSE(c->poll(20ms).has_value());
    }

    wire::Message hello = make_command("hello");
    hello.append("btid", std::uint64_t{1});
    b.send(hello);
    auto got = hub.poll(5s);
    REQUIRE(got);
    CHECK(got->u64("btid") == 1);
    CHECK_FALSE(hub.poll(20ms).has_value());

    hub.send(make_command(kCmdStop));
    hub.close();
    auto last = a.poll(5s);
    REQUIRE(last);
    CHECK(last->str("cmd") == "stop");
    CHECK(code_of([&] { a.poll(5s); }) == ChannelErrc::kClosed);
    CHECK(code_of([&] { hub.send(make_command(kCmdStop)); }) == ChannelErrc::kClosed);
  }
}
