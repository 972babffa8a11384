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

// The producer side of the pipeline: sample scenes, render, annotate and
// publish frames, obeying control commands between frames.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "randstream/channel.hpp"
#include "randstream/random.hpp"
#include "randstream/render.hpp"
#include "randstream/scene.hpp"

namespace randstream {

/// $RANDSTREAM_SCENE_DIR if set, otherwise the scenes/ directory of the source tree.
std::filesystem::path default_scene_dir();

/// Loads `<dir>/<name>.cfg` and applies `settings` in order. Throws
/// std::invalid_argument for unknown scenes or bad settings.
SceneConfig resolve_scene(const std::string& name, const std::filesystem::path& dir,
                          const std::vector<std::pair<std::string, std::string>>& settings = {});

/// Splits `key=value`. Throws std::invalid_argument.
std::pair<std::string, std::string> parse_setting(const std::string& text);

/// Deterministic frame stream of one producer. A scene is sampled every
/// images_per_scene frames; the frames in between reuse it with a fresh
/// camera. Class probabilities set between frames take effect at the next
/// scene.
class FrameGenerator {
 public:
  FrameGenerator(SceneConfig cfg, std::uint64_t btid, std::uint64_t seed);

  /// Frame message (see emit_frame) plus the `class_probs` it was sampled with.
  wire::Message next();
  void set_class_probs(const std::vector<double>& probs);
  const std::vector<double>& class_probs() const { return active_probs_; }
  std::uint64_t frame() const { return frame_; }
  const SceneConfig& config() const { return sampler_.config(); }

 private:
  SceneSampler sampler_;
  std::uint64_t btid_;
  Rng rng_;
  std::uint64_t frame_ = 0;
  std::optional<SceneSpec> scene_;
  std::vector<double> active_probs_;
  std::optional<std::vector<double>> pending_probs_;
};

struct ProducerOptions {
  std::uint64_t btid = 0;
  std::string scene;
  std::uint64_t seed = 0;
  std::map<std::string, channel::Endpoint> sockets;  // needs DATA; CTRL optional
  std::uint64_t frames = 0;                          // 0 = until stopped
  std::vector<std::pair<std::string, std::string>> settings;
  std::filesystem::path scene_dir;
  std::chrono::milliseconds jitter_max{0};  // random sleep before each publish
  std::size_t send_capacity = channel::kDefaultCapacity;
  int socket_send_buffer = 0;
};

/// Runs until `frames` are published or `stop` arrives. Returns a process
/// exit code: 0 clean stop, 3 bad scene, 4 transport failure.
int run_producer(const ProducerOptions& opts);

}  // namespace randstream
