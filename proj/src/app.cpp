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

#include "randstream/app.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "randstream/image_io.hpp"
#include "randstream/launcher.hpp"
#include "randstream/producer.hpp"
#include "randstream/shard.hpp"

#ifndef RANDSTREAM_PRODUCER_PATH
#define RANDSTREAM_PRODUCER_PATH "randstream-producer"
#endif

namespace randstream::app {

namespace {

using Clock = std::chrono::steady_clock;
using Millis = std::chrono::milliseconds;
using Fleet = std::unique_ptr<launcher::LaunchInfo>;

std::vector<std::pair<std::string, std::string>> parse_settings(const std::vector<std::string>& settings) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : settings) out.push_back(parse_setting(s));
  return out;
}

SceneConfig check_scene(const FleetOptions& o, const std::vector<std::string>& settings) {
  try {
    return resolve_scene(o.scene, o.scene_dir, parse_settings(settings));
  } catch (const std::invalid_argument& e) {
    throw AppError(kExitUsage, e.what());
  }
}

Fleet start_fleet(const FleetOptions& o, const std::vector<std::string>& settings, std::vector<std::string> extra,
                  const channel::DistributorConfig& data = {}) {
  if (o.instances < 1) throw AppError(kExitUsage, "--instances must be >= 1");
  check_scene(o, settings);

  launcher::LaunchConfig lc;
  lc.num_instances = o.instances;
  lc.scene = o.scene;
  lc.base_seed = o.seed;
  lc.executable = (o.producer.empty() ? default_producer() : o.producer).string();
  lc.host = bind_host();
  lc.data = data;
  lc.extra_args = {"--scene-dir", (o.scene_dir.empty() ? default_scene_dir() : o.scene_dir).string()};
  for (const auto& s : settings) {
    lc.extra_args.push_back("--set");
    lc.extra_args.push_back(s);
  }
  if (o.jitter.count() > 0) {
    lc.extra_args.push_back("--jitter-ms");
    lc.extra_args.push_back(std::to_string(o.jitter.count()));
  }
  lc.extra_args.insert(lc.extra_args.end(), extra.begin(), extra.end());
  try {
    return launcher::launch(lc);
  } catch (const launcher::LaunchError& e) {
    throw AppError(kExitRuntime, e.what());
  }
}

// Next frame, or an error naming the producer that died.
wire::Message receive(launcher::LaunchInfo& fleet, Millis timeout) {
  const auto deadline = Clock::now() + timeout;
  while (true) {
    if (auto m = fleet.distributor().try_next_message(Millis(500))) return std::move(*m);
    for (const auto& h : fleet.poll_health()) {
      if (h.state == launcher::ChildState::kExited && h.exit_code != 0) {
        throw AppError(kExitRuntime, "producer " + std::to_string(h.btid) + " exited with code " +
                                         std::to_string(h.exit_code) + ": " + fleet.child_log(h.btid));
      }
    }
    if (Clock::now() >= deadline) {
      throw AppError(kExitRuntime, "no frame within " + std::to_string(timeout.count()) + " ms");
    }
  }
}

std::string fmt_vec(const std::vector<double>& v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(4);
  for (std::size_t i = 0; i < v.size(); ++i) ss << (i ? " " : "") << v[i];
  return ss.str();
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw AppError(kExitData, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string bind_host() {
  if (const char* env = std::getenv("RANDSTREAM_BIND_HOST"); env && *env) return env;
  return "127.0.0.1";
}

std::filesystem::path default_producer() {
  std::error_code ec;
  const auto self = std::filesystem::read_symlink("/proc/self/exe", ec);
  if (!ec) {
    const auto sibling = self.parent_path() / "randstream-producer";
    if (::access(sibling.c_str(), X_OK) == 0) return sibling;
  }
  return RANDSTREAM_PRODUCER_PATH;
}

std::string image_id_of(std::uint64_t btid, std::uint64_t frame) {
  return std::to_string(btid) + "-" + std::to_string(frame);
}

// ------------------------------------------------------------------ generate

GenerateResult run_generate(const GenerateOptions& opts) {
  if (opts.frames < 1) throw AppError(kExitUsage, "--frames must be >= 1");
  Fleet fleet = start_fleet(opts, opts.settings, {"--frames", std::to_string(opts.frames)});

  std::error_code ec;
  std::filesystem::create_directories(opts.out_dir, ec);
  if (ec) throw AppError(kExitRuntime, "cannot create " + opts.out_dir.string() + ": " + ec.message());

  GenerateResult res;
  std::vector<std::unique_ptr<shard::ShardWriter>> writers;
  for (std::size_t b = 0; b < opts.instances; ++b) {
    res.shards.push_back(opts.out_dir / ("shard-" + std::to_string(b) + ".drsh"));
    res.counts.push_back(0);
    try {
      writers.push_back(std::make_unique<shard::ShardWriter>(res.shards.back()));
    } catch (const std::exception& e) {
      throw AppError(kExitRuntime, e.what());
    }
  }

  // Each connection is FIFO, so a producer's frames arrive in order.
  const std::uint64_t total = opts.frames * opts.instances;
  for (std::uint64_t i = 0; i < total; ++i) {
    const wire::Message m = receive(*fleet, opts.receive_timeout);
    const std::uint64_t btid = m.u64("btid");
    const std::uint64_t frame = m.u64("frame");
    if (btid >= opts.instances || frame != res.counts[btid]) {
      throw AppError(kExitRuntime, "unexpected frame " + image_id_of(btid, frame));
    }
    writers[btid]->write(m);
    ++res.counts[btid];
  }
  fleet->shutdown();
  for (auto& w : writers) w->close();
  return res;
}

// --------------------------------------------------------------------- bench

BenchReport run_bench(const BenchOptions& opts) {
  if (opts.duration_s <= 0) throw AppError(kExitUsage, "--duration must be > 0");
  if (opts.workers < 1) throw AppError(kExitUsage, "--workers must be >= 1");
  channel::DistributorConfig dc;
  dc.worker_count = opts.workers;
  Fleet fleet = start_fleet(opts, opts.settings, {}, dc);
  channel::Distributor& dist = fleet->distributor();

  std::atomic<bool> started{false};
  std::atomic<bool> stop{false};
  std::atomic<std::uint64_t> frames{0};
  std::mutex start_mu;
  Clock::time_point t0;

  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < opts.workers; ++w) {
    workers.emplace_back([&] {
      while (!stop.load()) {
        std::optional<wire::Message> m;
        try {
          m = dist.try_next_message(Millis(100));
        } catch (const channel::ChannelError&) {
          return;
        }
        if (!m || stop.load()) continue;
        (void)read_annotations(*m);
        if (!started.load()) {
          std::lock_guard lk(start_mu);
          if (!started.load()) {
            t0 = Clock::now();
            started.store(true);
          }
        }
        frames.fetch_add(1);
      }
    });
  }

  const auto give_up = Clock::now() + opts.receive_timeout;
  while (!started.load() && Clock::now() < give_up) std::this_thread::sleep_for(Millis(5));
  BenchReport r;
  r.scene = opts.scene;
  r.instances = opts.instances;
  if (started.load()) {
    std::this_thread::sleep_until(t0 + std::chrono::duration<double>(opts.duration_s));
    r.frames = frames.load();
    r.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    r.fps = static_cast<double>(r.frames) / r.wall_seconds;
  }
  stop.store(true);
  for (auto& t : workers) t.join();
  fleet->shutdown();
  if (!started.load()) throw AppError(kExitRuntime, "no frames received");
  return r;
}

std::string format_bench_row(const BenchReport& r) {
  std::ostringstream ss;
  ss << "scene=" << r.scene << " instances=" << r.instances << " frames=" << r.frames << std::fixed
     << std::setprecision(2) << " wall_s=" << r.wall_seconds << " fps=" << r.fps;
  return ss.str();
}

// ----------------------------------------------------------------- demo loop

std::vector<eval::Detection> mock_detect(const Annotations& ann, const std::string& image_id,
                                         const MockDetectorConfig& cfg, std::uint32_t width,
                                         std::uint32_t height, Rng& rng) {
  std::vector<eval::Detection> out;
  for (const auto& o : ann.objects) {
    const auto c = static_cast<std::size_t>(o.class_id);
    const double drop = c < cfg.drop_rate.size() ? cfg.drop_rate[c] : 0.0;
    if (uniform01(rng) < drop) continue;
    Box b = o.bbox;
    if (cfg.box_jitter > 0) {
      const double sx = cfg.box_jitter * b.width(), sy = cfg.box_jitter * b.height();
      b.x_min += sx * normal01(rng);
      b.x_max += sx * normal01(rng);
      b.y_min += sy * normal01(rng);
      b.y_max += sy * normal01(rng);
      if (b.x_max < b.x_min) std::swap(b.x_min, b.x_max);
      if (b.y_max < b.y_min) std::swap(b.y_min, b.y_max);
    }
    out.push_back({image_id, o.class_id, b, uniform(rng, cfg.confidence_min, 1.0)});
  }
  // Spurious boxes: Bernoulli per image with the rate's fractional part.
  double fp = cfg.false_positive_rate;
  const std::int64_t k = std::max<std::int64_t>(1, static_cast<std::int64_t>(cfg.drop_rate.size()));
  while (fp > 0) {
    if (uniform01(rng) < std::min(fp, 1.0)) {
      const double w = uniform(rng, 10, width / 4.0), h = uniform(rng, 10, height / 4.0);
      const double x = uniform(rng, 0, width - w), y = uniform(rng, 0, height - h);
      const auto cls = static_cast<std::int64_t>(uniform01(rng) * static_cast<double>(k));
      out.push_back({image_id, std::min(cls, k - 1), {x, y, x + w, y + h}, uniform(rng, 0.1, cfg.confidence_min)});
    }
    fp -= 1.0;
  }
  return out;
}

std::vector<DemoStep> run_demo_loop(const DemoOptions& opts, std::ostream* log) {
  if (opts.classes < 1) throw AppError(kExitUsage, "--classes must be >= 1");
  if (opts.cadence < 1) throw AppError(kExitUsage, "--cadence must be >= 1");
  const auto k = static_cast<std::size_t>(opts.classes);
  try {
    opts.policy.validate(k);
  } catch (const std::invalid_argument& e) {
    throw AppError(kExitUsage, e.what());
  }
  std::vector<std::string> settings{"num_classes=" + std::to_string(k)};
  settings.insert(settings.end(), opts.settings.begin(), opts.settings.end());
  Fleet fleet = start_fleet(opts, settings, {});
  channel::ControlHub& hub = *fleet->control();

  adapt::FeedbackState state(opts.policy);
  Rng rng(opts.mock.seed);
  std::vector<DemoStep> steps;
  eval::SummaryOptions so;
  so.num_classes = k;

  for (std::size_t s = 1; s <= opts.steps; ++s) {
    std::vector<eval::Detection> dets;
    std::vector<eval::GroundTruth> gts;
    std::vector<double> observed;
    for (std::size_t i = 0; i < opts.cadence; ++i) {
      const wire::Message m = receive(*fleet, opts.receive_timeout);
      const Annotations ann = read_annotations(m);
      const auto& img = m.tensor("image");
      const std::string id = image_id_of(ann.btid, ann.frame);
      for (const auto& o : ann.objects) gts.push_back({id, o.class_id, o.bbox});
      auto d = mock_detect(ann, id, opts.mock, img.dims[1], img.dims[0], rng);
      dets.insert(dets.end(), d.begin(), d.end());
      if (const auto* p = m.get_if<wire::Tensor>("class_probs")) {
        const auto f = p->as_f32();
        observed.assign(f.begin(), f.end());
      }
    }
    const std::vector<std::vector<eval::Detection>> runs{std::move(dets)};
    const eval::APReport rep = eval::map_summary(runs, gts, so);

    adapt::ClassFeedback fb;
    fb.step = s;
    const auto& prev = state.smoothed_scores();
    for (std::size_t c = 0; c < k; ++c) {
      const auto& v = c < rep.per_class_map.size() ? rep.per_class_map[c] : std::nullopt;
      fb.scores.push_back(v ? std::clamp(*v, 0.0, 1.0) : (prev.size() == k ? prev[c] : 1.0));
    }
    const auto probs = adapt::feedback_step(hub, state, fb);
    steps.push_back({s, fb.scores, probs, observed});
    if (log) {
      *log << "step " << s << " scores " << fmt_vec(fb.scores) << " probs " << fmt_vec(probs) << " observed "
           << fmt_vec(observed) << std::endl;
    }
  }
  fleet->shutdown();
  return steps;
}

// ---------------------------------------------------------------------- eval

eval::APReport run_eval(const EvalOptions& opts) {
  if (opts.dets.empty()) throw AppError(kExitUsage, "at least one detection file required");
  std::vector<eval::GroundTruth> gts;
  std::vector<std::vector<eval::Detection>> runs;
  try {
    gts = eval::parse_ground_truth(read_text(opts.gt));
    for (const auto& p : opts.dets) runs.push_back(eval::parse_detections(read_text(p)));
  } catch (const std::invalid_argument& e) {
    throw AppError(kExitData, e.what());
  }
  eval::SummaryOptions so = opts.summary;
  so.keep_curves = so.keep_curves || !opts.curves_csv.empty();
  const eval::APReport rep = eval::map_summary(runs, gts, so);

  if (!opts.out.empty()) {
    std::ofstream out(opts.out);
    if (!out) throw AppError(kExitRuntime, "cannot write " + opts.out.string());
    out << report_json(rep) << '\n';
  }
  if (!opts.curves_csv.empty()) {
    std::ofstream out(opts.curves_csv);
    if (!out) throw AppError(kExitRuntime, "cannot write " + opts.curves_csv.string());
    out << "run,class,threshold,precision,recall\n" << std::setprecision(17);
    for (const auto& c : rep.curves) {
      for (const auto& p : c.points) {
        out << c.run << ',' << c.class_id << ',' << c.threshold << ',' << p.precision << ',' << p.recall << '\n';
      }
    }
  }
  return rep;
}

std::string report_json(const eval::APReport& r) {
  nlohmann::json j;
  j["mAP"] = r.map;
  j["AP50"] = r.ap50;
  j["AP75"] = r.ap75;
  auto& pc = j["per_class_mAP"] = nlohmann::json::array();
  for (const auto& v : r.per_class_map) pc.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
  j["run_mAP"] = r.run_map;
  j["sigma_mAP"] = r.sigma_map;
  j["num_runs"] = r.run_map.size();
  j["thresholds"] = r.thresholds;
  return j.dump(2);
}

// -------------------------------------------------------------------- replay

std::size_t run_replay(const ReplayOptions& opts) {
  std::vector<wire::Message> msgs;
  try {
    msgs = shard::read_shard(opts.shard);
  } catch (const wire::WireError& e) {
    throw AppError(kExitData, e.what());
  } catch (const std::runtime_error& e) {
    throw AppError(kExitData, e.what());
  }
  std::error_code ec;
  std::filesystem::create_directories(opts.png_dir, ec);
  if (ec) throw AppError(kExitRuntime, "cannot create " + opts.png_dir.string() + ": " + ec.message());

  std::vector<eval::GroundTruth> gts;
  static constexpr std::uint8_t kBoxColor[3] = {255, 40, 40};
  for (const auto& m : msgs) {
    Annotations ann;
    try {
      ann = read_annotations(m);
    } catch (const std::exception& e) {
      throw AppError(kExitData, e.what());
    }
    const wire::Tensor& img = m.tensor("image");
    if (img.dtype != wire::DType::kU8 || img.dims.size() != 3 || img.dims[2] != 3) {
      throw AppError(kExitData, "frame " + image_id_of(ann.btid, ann.frame) + ": image is not u8 [H, W, 3]");
    }
    const std::uint32_t h = img.dims[0], w = img.dims[1];
    std::vector<std::uint8_t> rgb = img.data;
    const std::string id = image_id_of(ann.btid, ann.frame);
    std::ofstream side(opts.png_dir / (id + ".txt"));
    side << "# class_id x_min y_min x_max y_max visibility\n" << std::setprecision(9);
    for (const auto& o : ann.objects) {
      if (opts.overlay) draw_box(rgb, w, h, o.bbox, kBoxColor);
      side << o.class_id << ' ' << o.bbox.x_min << ' ' << o.bbox.y_min << ' ' << o.bbox.x_max << ' ' << o.bbox.y_max
           << ' ' << o.visibility << '\n';
      gts.push_back({id, o.class_id, o.bbox});
    }
    write_png(opts.png_dir / (id + ".png"), w, h, rgb);
  }
  if (!opts.gt_out.empty()) {
    std::ofstream out(opts.gt_out);
    if (!out) throw AppError(kExitRuntime, "cannot write " + opts.gt_out.string());
    out << eval::format_ground_truth(gts);
  }
  return msgs.size();
}

}  // namespace randstream::app
