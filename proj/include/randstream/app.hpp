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

// Command implementations behind the `randstream` CLI.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "randstream/adapt.hpp"
#include "randstream/eval.hpp"
#include "randstream/random.hpp"
#include "randstream/render.hpp"

namespace randstream::app {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitRuntime = 4 };

class AppError : public std::runtime_error {
 public:
  AppError(int exit_code, const std::string& what) : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

/// $RANDSTREAM_BIND_HOST, or 127.0.0.1.
std::string bind_host();
/// randstream-producer next to the running executable, falling back to the build tree.
std::filesystem::path default_producer();

struct FleetOptions {
  std::string scene = "complex";
  std::size_t instances = 1;
  std::uint64_t seed = 0;
  std::filesystem::path producer;   // empty: default_producer()
  std::filesystem::path scene_dir;  // empty: default_scene_dir()
  std::vector<std::string> settings;  // key=value scene overrides
  std::chrono::milliseconds jitter{0};
  std::chrono::milliseconds receive_timeout{60000};
};

struct GenerateOptions : FleetOptions {
  std::uint64_t frames = 10;  // per producer
  std::filesystem::path out_dir = ".";
};

struct GenerateResult {
  std::vector<std::filesystem::path> shards;  // index = btid
  std::vector<std::uint64_t> counts;
};

/// One shard per producer, `shard-<btid>.drsh`, messages in frame order.
GenerateResult run_generate(const GenerateOptions& opts);

struct BenchOptions : FleetOptions {
  double duration_s = 10;
  std::size_t workers = 4;
};

struct BenchReport {
  std::string scene;
  std::size_t instances = 0;
  std::uint64_t frames = 0;
  double wall_seconds = 0;
  double fps = 0;
};

/// Receive-side rate: consumer workers count frames from the first arrival
/// until `duration_s` has passed.
BenchReport run_bench(const BenchOptions& opts);
std::string format_bench_row(const BenchReport& r);

struct MockDetectorConfig {
  std::vector<double> drop_rate;  // per class; missing classes never drop
  double box_jitter = 0;          // std dev of corner noise, as a fraction of box size
  double false_positive_rate = 0; // expected spurious boxes per image
  double confidence_min = 0.5;
  std::uint64_t seed = 1;
};

/// Perturbs the ground truth of one frame into detections.
std::vector<eval::Detection> mock_detect(const Annotations& ann, const std::string& image_id,
                                         const MockDetectorConfig& cfg, std::uint32_t width,
                                         std::uint32_t height, Rng& rng);

std::string image_id_of(std::uint64_t btid, std::uint64_t frame);

struct DemoOptions : FleetOptions {
  std::size_t steps = 10;
  int classes = 6;
  std::size_t cadence = adapt::kDefaultCadence;  // frames per feedback step
  adapt::AdaptPolicy policy;
  MockDetectorConfig mock;
};

struct DemoStep {
  std::size_t step = 0;
  std::vector<double> scores;    // per-class AP of the window, or the carried value
  std::vector<double> probs;     // broadcast after this step
  std::vector<double> observed;  // class_probs stamped on the window's last frame
};

/// Closed loop: producers -> mock detector -> per-class AP -> feedback_step.
/// Classes without ground truth in a window keep their smoothed score.
std::vector<DemoStep> run_demo_loop(const DemoOptions& opts, std::ostream* log = nullptr);

struct EvalOptions {
  std::filesystem::path gt;
  std::vector<std::filesystem::path> dets;  // one file per run
  std::filesystem::path out;                // report.json; empty skips
  std::filesystem::path curves_csv;         // empty skips
  eval::SummaryOptions summary;
};

eval::APReport run_eval(const EvalOptions& opts);
std::string report_json(const eval::APReport& r);

struct ReplayOptions {
  std::filesystem::path shard;
  std::filesystem::path png_dir;
  bool overlay = true;
  std::filesystem::path gt_out;  // ground-truth records; empty skips
};

/// Writes `<btid>-<frame>.png` and `<btid>-<frame>.txt` per message.
/// Returns the message count.
std::size_t run_replay(const ReplayOptions& opts);

}  // namespace randstream::app
