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

// randstream-producer: one simulation instance, normally started by the launcher.

#include <CLI11.hpp>

#include <iostream>

#include "randstream/producer.hpp"

int main(int argc, char** argv) {
  CLI::App app{"randstream producer"};
  randstream::ProducerOptions opts;
  std::vector<std::string> socks;
  std::vector<std::string> sets;
  std::string scene_dir;
  long jitter_ms = 0;
  app.add_option("--btid", opts.btid, "producer id")->required();
  app.add_option("--scene", opts.scene, "scene name")->required();
  app.add_option("--seed", opts.seed, "random seed")->required();
  app.add_option("--sock", socks, "NAME=tcp://host:port")->required();
  app.add_option("--frames", opts.frames, "frames to publish (0 = until stopped)");
  app.add_option("--set", sets, "scene setting override key=value");
  app.add_option("--scene-dir", scene_dir, "scene directory");
  app.add_option("--jitter-ms", jitter_ms, "random delay before each publish, up to this many ms")->check(CLI::NonNegativeNumber);
  app.add_option("--send-capacity", opts.send_capacity, "send queue capacity")->check(CLI::PositiveNumber);
  app.add_option("--sndbuf", opts.socket_send_buffer, "socket send buffer bytes");
  try {
    app.parse(argc, argv);
    for (const auto& s : socks) {
      auto [name, uri] = randstream::parse_setting(s);
      opts.sockets[name] = randstream::net::Endpoint::parse(uri);
    }
    for (const auto& s : sets) opts.settings.push_back(randstream::parse_setting(s));
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "randstream-producer: " << e.what() << '\n';
    return 2;
  }
  opts.scene_dir = scene_dir;
  opts.jitter_max = std::chrono::milliseconds(jitter_ms);
  return randstream::run_producer(opts);
}
