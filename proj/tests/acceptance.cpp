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

// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any
// criterion fails.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <json.hpp>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "map_oracle.hpp"
#include "randstream/app.hpp"
#include "randstream/camera.hpp"
#include "randstream/channel.hpp"
#include "randstream/launcher.hpp"
#include "randstream/producer.hpp"
#include "randstream/shard.hpp"
#include "randstream/supershape.hpp"
#include "render_fixtures.hpp"
#include "test_util.hpp"
#include "wire_gen.hpp"

using namespace randstream;
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;
std::set<std::string> only;  // criterion names from argv; empty runs all

void report(const std::string& name, const std::function<Outcome()>& check) {
  if (!only.empty() && !only.count(name)) return;
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s  %-22s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const std::vector<std::string> kSmall{"width=160", "height=128", "focal=150", "cx=80", "cy=64"};

template <class Opts>
Opts fleet(const std::string& scene, std::size_t n, std::uint64_t seed) {
  Opts o;
  o.scene = scene;
  o.instances = n;
  o.seed = seed;
  o.producer = RANDSTREAM_PRODUCER;
  o.scene_dir = test::scene_dir();
  return o;
}

Outcome exactly_once() {
  launcher::LaunchConfig cfg;
  cfg.num_instances = 4;
  cfg.scene = "cube";
  cfg.base_seed = 1;
  cfg.executable = RANDSTREAM_PRODUCER;
  cfg.extra_args = {"--frames", "500", "--jitter-ms", "5", "--scene-dir", test::scene_dir().string()};
  for (const auto& s : kSmall) cfg.extra_args.insert(cfg.extra_args.end(), {"--set", s});
  cfg.data.worker_count = 3;

  const auto t0 = Clock::now();
  auto li = launcher::launch(cfg);
  auto& dist = li->distributor();
  std::mutex mu;
  std::multiset<std::pair<std::uint64_t, std::uint64_t>> seen;
  std::atomic<std::size_t> total{0};
  std::vector<std::thread> workers;
  for (int w = 0; w < 3; ++w) {
    workers.emplace_back([&] {
      while (total.load() < 2000 && Clock::now() - t0 < 60s) {
        auto m = dist.try_next_message(100ms);
        if (!m) continue;
        std::lock_guard lk(mu);
        seen.insert({m->u64("btid"), m->u64("frame")});
        ++total;
      }
    });
  }
  for (auto& t : workers) t.join();
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  // Anything arriving now would be a duplicate or an extra.
  std::size_t extra = 0;
  while (dist.try_next_message(500ms)) ++extra;
  li->shutdown(5s);

  const std::set<std::pair<std::uint64_t, std::uint64_t>> distinct(seen.begin(), seen.end());
  std::size_t expected_present = 0;
  for (std::uint64_t b = 0; b < 4; ++b) {
    for (std::uint64_t f = 0; f < 500; ++f) expected_present += distinct.count({b, f});
  }
  const std::size_t dups = seen.size() - distinct.size() + extra;
  const std::size_t lost = 2000 - expected_present;
  return {distinct.size() == 2000 && dups == 0 && lost == 0 && secs < 60,
          fmt("distinct=%zu duplicates=%zu lost=%zu time=%.1fs", distinct.size(), dups, lost, secs)};
}

Outcome backpressure() {
  channel::DistributorConfig dc;
  dc.queue_capacity = 10;
  auto dist = channel::Distributor::bind(dc);

  std::vector<std::pair<std::string, std::string>> small;
  for (const auto& kv : kSmall) small.push_back(parse_setting(kv));
  FrameGenerator gen(resolve_scene("cube", test::scene_dir(), small), 0, 3);
  const wire::Message sample = gen.next();
  const std::size_t frame_bytes = wire::encode_framed(sample).size();

  constexpr int kProducers = 2;
  struct Prod {
    std::unique_ptr<channel::Publisher> pub;
    std::atomic<std::uint64_t> admitted{0};
    std::atomic<std::int64_t> in_publish_since{0};  // ns since epoch, 0 when idle
    std::thread thread;
  };
  std::vector<Prod> prods(kProducers);
  std::atomic<bool> stop{false};
  for (int b = 0; b < kProducers; ++b) {
    channel::PublisherConfig pc;
    pc.endpoint = dist.endpoint();
    pc.btid = static_cast<std::uint64_t>(b);
    pc.send_capacity = 10;
    prods[b].pub = std::make_unique<channel::Publisher>(channel::Publisher::connect(pc));
  }
  for (int b = 0; b < kProducers; ++b) {
    prods[b].thread = std::thread([&, b] {
      wire::Message m = sample;
      auto& p = prods[b];
      try {
        for (std::uint64_t f = 0; !stop.load(); ++f) {
          wire::Message out;
          out.append("btid", static_cast<std::uint64_t>(b));
          out.append("frame", f);
          for (const auto& [k, v] : m.entries()) {
            if (k != "btid" && k != "frame") out.append(k, v);
          }
          p.in_publish_since = Clock::now().time_since_epoch().count();
          p.pub->publish(out);
          p.in_publish_since = 0;
          p.admitted = f + 1;
        }
      } catch (const channel::ChannelError&) {
      }
    });
  }

  std::map<std::uint64_t, std::uint64_t> delivered;
  // Unthrottled phase: the consumer keeps up, which measures producer rate.
  const auto warm = Clock::now();
  std::uint64_t warm_count = 0;
  while (Clock::now() - warm < 1s) {
    if (auto m = dist.try_next_message(50ms)) {
      delivered[m->u64("btid")]++;
      ++warm_count;
    }
  }
  const double rate = static_cast<double>(warm_count) / kProducers;

  std::this_thread::sleep_for(2s);  // consumer paused
  const auto now = Clock::now().time_since_epoch().count();
  const auto recv_buf = static_cast<std::size_t>(dist.socket_recv_buffer());
  bool ok = rate >= 500;
  std::string detail = fmt("rate=%.0f/s per producer, frame=%zuB, rcvbuf=%zu;", rate, frame_bytes, recv_buf);
  for (int b = 0; b < kProducers; ++b) {
    const auto send_buf = static_cast<std::size_t>(prods[b].pub->socket_send_buffer());
    const std::size_t bound = 10 + dc.queue_capacity + channel::transport_allowance(frame_bytes, send_buf, recv_buf);
    const std::uint64_t admitted = prods[b].pub->stats().published;
    const std::uint64_t backlog = admitted - delivered[static_cast<std::uint64_t>(b)];
    const std::int64_t since = prods[b].in_publish_since.load();
    const double blocked = since ? static_cast<double>(now - since) * 1e-9 : 0.0;
    ok = ok && backlog <= bound && blocked > 1.0;
    detail += fmt(" p%d backlog=%llu bound=%zu blocked=%.2fs", b, static_cast<unsigned long long>(backlog), bound, blocked);
  }
  stop = true;
  dist.close();
  for (auto& p : prods) p.thread.join();
  return {ok, detail};
}

double bench_fps(const std::string& scene, std::size_t n) {
  auto o = fleet<app::BenchOptions>(scene, n, 7);
  o.duration_s = 10;
  o.workers = 4;
  return app::run_bench(o).fps;
}

Outcome scaling() {
  const long cores = ::sysconf(_SC_NPROCESSORS_ONLN);
  bool ok = true;
  std::string detail = fmt("cores=%ld;", cores);
  for (const char* scene : {"cube", "complex"}) {
    const double one = bench_fps(scene, 1);
    const double four = bench_fps(scene, 4);
    const double ratio = four / one;
    ok = ok && ratio >= 1.5;
    detail += fmt(" %s 1p=%.1f 4p=%.1f fps ratio=%.2f", scene, one, four, ratio);
  }
  return {ok, detail + " (need >= 1.5)"};
}

Outcome wire_roundtrip() {
  std::mt19937_64 rng(2026);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto m = test::random_message(rng);
    const auto bytes = wire::encode_message(m);
    const auto back = wire::decode_message(bytes);
    if (wire::encode_message(back) != bytes || back.size() != m.size()) ++bad;
  }
  const auto dir = test::fixture_dir() / "wire";
  const auto expected = nlohmann::json::parse(std::ifstream(dir / "expected.json"));
  int golden = 0, golden_bad = 0;
  for (const auto& [name, want] : expected.items()) {
    ++golden;
    const auto bytes = test::read_bytes(dir / (name + ".bin"));
    try {
      const auto m = wire::decode_message(bytes);
      bool same = wire::encode_message(m) == bytes && m.size() == want["entries"].size();
      for (std::size_t k = 0; same && k < m.size(); ++k) same = m.entries()[k].first == want["entries"][k]["key"];
      golden_bad += !same;
    } catch (const wire::WireError&) {
      ++golden_bad;
    }
  }
  return {bad == 0 && golden > 0 && golden_bad == 0,
          fmt("random mismatches=%d/1000 golden mismatches=%d/%d", bad, golden_bad, golden)};
}

Outcome sphere() {
  double worst = 0;
  for (double m : {0.0, 2.0, 4.0, 6.0, 12.0}) {
    const SuperFormula f{m, 1, 1, 2, 2, 2};
    for (const auto& v : supershape_mesh({f, f}, 32, 32).vertices) worst = std::max(worst, std::abs(v.cast<double>().norm() - 1.0));
  }
  return {worst < 1e-6, fmt("max |r-1|=%.2e", worst)};
}

Outcome projection() {
  Rng rng(5);
  double axis = 0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d pos(uniform(rng, -10, 10), uniform(rng, -10, 10), uniform(rng, -10, 10));
    const Eigen::Vector3d target(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    if ((pos - target).norm() < 0.5) continue;
    const Camera cam = Camera::look_at(pos, target, uniform(rng, 0, 6.28), {});
    const PixelCoord p = object_to_pixel(cam, pos + uniform(rng, 0.1, 3.0) * (target - pos));
    axis = std::max({axis, std::abs(p.u - cam.intrinsics.cx), std::abs(p.v - cam.intrinsics.cy)});
  }
  const Camera cam = Camera::look_at({0, 0, 5}, {0, 0, 0}, 0, {500, 320, 256, 640, 512});
  const PixelCoord p = object_to_pixel(cam, Eigen::Vector3d(0.5, 0, 0));
  const double fixture = std::max(std::abs(p.u - 370.0), std::abs(p.v - 256.0));
  return {axis < 1e-9 && fixture < 1e-6, fmt("axis err=%.2e fixture err=%.2e", axis, fixture)};
}

Outcome visibility() {
  SceneSpec s = test::top_down();
  s.instances.push_back(test::make_instance(0, 0, test::square_mesh(0.5), {0, 0, 0}));
  const double alone = [&] {
    const auto ann = annotate(s, rasterize(s));
    return ann.objects.empty() ? -1.0 : ann.objects[0].visibility;
  }();
  s.instances.push_back(test::make_instance(1, kOccluderClass, test::square_mesh(0.5), {-0.5, 0, 1}));
  const auto ann = annotate(s, rasterize(s));
  const double half = ann.objects.empty() ? -1.0 : ann.objects[0].visibility;
  const double side = 100;
  return {alone == 1.0 && std::abs(half - 0.5) <= 2.0 / side,
          fmt("unoccluded=%.6f half-occluded=%.6f (tol %.3f)", alone, half, 2.0 / side)};
}

Outcome map_oracle() {
  double worst = 0;
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    const auto f = test::make_fixture(seed, 24, 3, 3);
    const auto rep = eval::map_summary(f.runs, f.gts);
    const auto o = test::oracle_summary(f.runs, f.gts);
    worst = std::max({worst, std::abs(rep.map - o.map), std::abs(rep.ap50 - o.ap50), std::abs(rep.ap75 - o.ap75)});
  }
  const auto f = test::make_fixture(9, 24, 3, 1);
  std::vector<eval::Detection> same;
  for (const auto& g : f.gts) same.push_back({g.image_id, g.class_id, g.bbox, 0.9});
  const std::vector<std::vector<eval::Detection>> runs{same};
  const double perfect = eval::map_summary(runs, f.gts).map;
  const double ap = eval::average_precision(eval::pr_curve({true, false, true}, 2));
  return {worst < 1e-9 && perfect == 1.0 && std::abs(ap - 0.8350) <= 5e-4,
          fmt("oracle diff=%.1e dets=gts mAP=%.6f AP(TP,FP,TP)=%.4f", worst, perfect, ap)};
}

Outcome adaptive_loop() {
  auto o = fleet<app::DemoOptions>("complex", 2, 11);
  o.settings = kSmall;
  o.classes = 6;
  o.steps = 10;
  o.cadence = 100;
  o.mock.drop_rate = {0.9};
  const auto steps = app::run_demo_loop(o);
  const double k = 6;
  int first_above = -1;
  double worst_sum = 0, min_p = 1;
  for (const auto& s : steps) {
    double sum = 0;
    for (double p : s.probs) {
      sum += p;
      min_p = std::min(min_p, p);
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1));
    if (first_above < 0 && s.probs[0] > 1 / k) first_above = static_cast<int>(s.step);
  }
  const auto& last = steps.back().probs;
  const bool argmax = std::max_element(last.begin(), last.end()) == last.begin();
  const bool ok = first_above >= 1 && first_above <= 5 && argmax && worst_sum <= 1e-9 && min_p >= o.policy.floor;
  return {ok, fmt("p0>1/K at step %d, final p0=%.3f argmax=%s, max|sum-1|=%.1e, min p=%.4f (floor %.2f)", first_above,
                  last[0], argmax ? "yes" : "no", worst_sum, min_p, o.policy.floor)};
}

Outcome determinism() {
  test::TempDir a, b;
  auto o = fleet<app::GenerateOptions>("complex", 2, 21);
  o.settings = kSmall;
  o.frames = 12;
  o.out_dir = a.path();
  const auto ra = app::run_generate(o);
  o.out_dir = b.path();
  const auto rb = app::run_generate(o);
  bool same = ra.shards.size() == rb.shards.size();
  std::size_t compared = 0;
  for (std::size_t i = 0; same && i < ra.shards.size(); ++i) {
    auto key = [](const std::vector<std::uint8_t>& p) {
      const auto m = wire::decode_message(p);
      return std::pair{m.u64("btid"), m.u64("frame")};
    };
    auto pa = shard::read_shard_payloads(ra.shards[i]);
    auto pb = shard::read_shard_payloads(rb.shards[i]);
    auto by_key = [&](const auto& x, const auto& y) { return key(x) < key(y); };
    std::sort(pa.begin(), pa.end(), by_key);
    std::sort(pb.begin(), pb.end(), by_key);
    same = pa == pb;
    compared += pa.size();
  }
  return {same && compared == 24, fmt("%zu messages compared, identical=%s", compared, same ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  only.insert(argv + 1, argv + argc);
  report("exactly-once", exactly_once);
  report("backpressure", backpressure);
  report("throughput-scaling", scaling);
  report("wire-roundtrip", wire_roundtrip);
  report("supershape-sphere", sphere);
  report("projection", projection);
  report("visibility", visibility);
  report("map-oracle", map_oracle);
  report("adaptive-loop", adaptive_loop);
  report("determinism", determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
