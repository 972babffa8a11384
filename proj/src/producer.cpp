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

#include "randstream/producer.hpp"

#include <cstdlib>
#include <iostream>
#include <thread>

#ifndef RANDSTREAM_SCENE_DIR
#define RANDSTREAM_SCENE_DIR "scenes"
#endif

namespace randstream {

std::filesystem::path default_scene_dir() {
  if (const char* env = std::getenv("RANDSTREAM_SCENE_DIR"); env && *env) return env;
  return RANDSTREAM_SCENE_DIR;
}

SceneConfig resolve_scene(const std::string& name, const std::filesystem::path& dir,
                          const std::vector<std::pair<std::string, std::string>>& settings) {
  if (name.empty() || name.find('/') != std::string::npos || name.find("..") != std::string::npos) {
    throw std::invalid_argument("bad scene name '" + name + "'");
  }
  const auto path = (dir.empty() ? default_scene_dir() : dir) / (name + ".cfg");
  if (!std::filesystem::is_regular_file(path)) {
    throw std::invalid_argument("unknown scene '" + name + "' (no " + path.string() + ")");
  }
  SceneConfig cfg = load_scene_config(path);
  for (const auto& [k, v] : settings) apply_scene_setting(cfg, k, v);
  cfg.normalize();
  cfg.validate();
  return cfg;
}

std::pair<std::string, std::string> parse_setting(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("expected key=value, got '" + text + "'");
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
  };
  std::string key = trim(text.substr(0, eq));
  if (key.empty()) throw std::invalid_argument("expected key=value, got '" + text + "'");
  return {key, trim(text.substr(eq + 1))};
}

FrameGenerator::FrameGenerator(SceneConfig cfg, std::uint64_t btid, std::uint64_t seed)
    : sampler_(std::move(cfg)), btid_(btid), rng_(seed), active_probs_(sampler_.config().class_probs) {}

void FrameGenerator::set_class_probs(const std::vector<double>& probs) {
  SceneSampler check = sampler_;
  check.set_class_probs(probs);  // validates before anything changes
  pending_probs_ = probs;
}

wire::Message FrameGenerator::next() {
  const auto& cfg = sampler_.config();
  const std::uint64_t per_scene = static_cast<std::uint64_t>(std::max(cfg.images_per_scene, 1));
  if (!scene_ || frame_ % per_scene == 0) {
    if (pending_probs_) {
      sampler_.set_class_probs(*pending_probs_);
      active_probs_ = sampler_.config().class_probs;
      pending_probs_.reset();
    }
    scene_ = sampler_.sample(rng_);
  } else {
    scene_->camera = sampler_.sample_camera(rng_);
  }
  const FrameBuffers fb = rasterize(*scene_, RenderOptions::from(cfg));
  Annotations ann = annotate(*scene_, fb, {cfg.min_visibility, cfg.amodal_boxes});
  ann.btid = btid_;
  ann.frame = frame_++;
  wire::Message m = emit_frame(fb, ann);
  const std::vector<float> probs(active_probs_.begin(), active_probs_.end());
  m.append("class_probs", wire::Tensor::f32({static_cast<std::uint32_t>(probs.size())}, probs));
  return m;
}

namespace {

enum class Control { kNone, kStop };

// Applies every pending command; blocks while paused.
Control apply_control(channel::ControlClient* ctrl, FrameGenerator& gen, bool& paused) {
  if (!ctrl) return Control::kNone;
  while (true) {
    std::optional<wire::Message> m;
    try {
      m = ctrl->poll(paused ? std::chrono::milliseconds(50) : std::chrono::milliseconds(0));
    } catch (const channel::ChannelError&) {
      // Consumer gone: nothing left to produce for.
      return Control::kStop;
    }
    if (!m) {
      if (paused) continue;
      return Control::kNone;
    }
    try {
      channel::validate_control(*m);
      const std::string& cmd = m->str("cmd");
      if (cmd == channel::kCmdStop) return Control::kStop;
      if (cmd == channel::kCmdPause) paused = true;
      else if (cmd == channel::kCmdResume) paused = false;
      else if (cmd == channel::kCmdSetClassProbs) gen.set_class_probs(channel::class_probs_of(*m));
      else std::cerr << "producer: ignoring unknown command '" << cmd << "'\n";
    } catch (const std::exception& e) {
      std::cerr << "producer: ignoring bad control message: " << e.what() << '\n';
    }
  }
}

// After the data connection died: was that part of an orderly stop?
bool stop_pending(channel::ControlClient* ctrl) {
  if (!ctrl) return false;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(500);
  while (std::chrono::steady_clock::now() < deadline) {
    try {
      auto m = ctrl->poll(std::chrono::milliseconds(50));
      if (m && m->get_if<std::string>("cmd") && m->str("cmd") == channel::kCmdStop) return true;
    } catch (const channel::ChannelError&) {
      return true;
    }
  }
  return false;
}

}  // namespace

int run_producer(const ProducerOptions& opts) {
  std::optional<FrameGenerator> gen;
  try {
    gen.emplace(resolve_scene(opts.scene, opts.scene_dir, opts.settings), opts.btid, opts.seed);
  } catch (const std::exception& e) {
    std::cerr << "producer " << opts.btid << ": " << e.what() << '\n';
    return 3;
  }

  auto data_it = opts.sockets.find("DATA");
  if (data_it == opts.sockets.end()) {
    std::cerr << "producer " << opts.btid << ": no DATA socket\n";
    return 2;
  }

  std::optional<channel::ControlClient> ctrl;
  std::optional<channel::Publisher> pub;
  try {
    if (auto it = opts.sockets.find("CTRL"); it != opts.sockets.end()) {
      ctrl.emplace(channel::ControlClient::connect(it->second));
    }
    pub.emplace(channel::Publisher::connect(
        {data_it->second, opts.btid, opts.send_capacity, std::chrono::milliseconds(30000), opts.socket_send_buffer}));
  } catch (const std::exception& e) {
    std::cerr << "producer " << opts.btid << ": " << e.what() << '\n';
    return 4;
  }
  channel::ControlClient* ctl = ctrl ? &*ctrl : nullptr;

  Rng jitter_rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
  bool paused = false;
  try {
    while (opts.frames == 0 || gen->frame() < opts.frames) {
      if (apply_control(ctl, *gen, paused) == Control::kStop) {
        pub->close(std::chrono::milliseconds(0));
        return 0;
      }
      wire::Message m = gen->next();
      if (opts.jitter_max.count() > 0) {
        const auto us = static_cast<long>(uniform01(jitter_rng) * 1000.0 * static_cast<double>(opts.jitter_max.count()));
        std::this_thread::sleep_for(std::chrono::microseconds(us));
      }
      pub->publish(m);
    }
    pub->close();
  } catch (const channel::ChannelError& e) {
    if (e.code() == channel::ChannelErrc::kPeerClosed && stop_pending(ctl)) return 0;
    std::cerr << "producer " << opts.btid << ": " << e.what() << '\n';
    return 4;
  }
  // Done: stay reachable until the consumer says stop or goes away.
  while (ctl) {
    try {
      auto m = ctl->poll(std::chrono::milliseconds(200));
      if (m && m->get_if<std::string>("cmd") && m->str("cmd") == channel::kCmdStop) break;
    } catch (const channel::ChannelError&) {
      break;
    }
  }
  return 0;
}

}  // namespace randstream
