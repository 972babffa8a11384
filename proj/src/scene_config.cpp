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

// Text scene configuration: one `key = value` per line, `#` starts a comment.
// Ranges and vectors are whitespace- or comma-separated numbers.
//
//   num_classes        K
//   class.<k>          m a b n1 n2 n3  m a b n1 n2 n3   (longitude, latitude)
//   class_probs        p0 p1 ... p(K-1)
//   objects_per_scene  n
//   object_scale       s
//   mesh_resolution    n
//   occluder_prob      p
//   occluder_m / occluder_ab / occluder_n / occluder_scale   lo hi
//   occluder_resolution n
//   placement_radius   r
//   drop_height        lo hi
//   hue / saturation / value   lo hi
//   hemisphere_radius  r_min r_max
//   focal cx cy width height
//   images_per_scene   N
//   background         r g b
//   ambient            a
//   min_visibility     v
//   amodal_boxes       true|false

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "randstream/scene.hpp"

namespace randstream {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<double> numbers(const std::string& key, const std::string& value) {
  std::string v = value;
  for (char& c : v) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(v);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double x;
    try {
      x = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw std::invalid_argument("scene config: '" + key + "' expects numbers, got '" + tok + "'");
    out.push_back(x);
  }
  return out;
}

std::vector<double> numbers(const std::string& key, const std::string& value, std::size_t count) {
  auto out = numbers(key, value);
  if (out.size() != count) {
    throw std::invalid_argument("scene config: '" + key + "' expects " + std::to_string(count) + " number(s)");
  }
  return out;
}

double number(const std::string& key, const std::string& value) { return numbers(key, value, 1)[0]; }

int integer(const std::string& key, const std::string& value) {
  const double x = number(key, value);
  if (x != static_cast<double>(static_cast<int>(x))) {
    throw std::invalid_argument("scene config: '" + key + "' expects an integer");
  }
  return static_cast<int>(x);
}

Range range(const std::string& key, const std::string& value) {
  auto v = numbers(key, value, 2);
  return {v[0], v[1]};
}

bool boolean(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument("scene config: '" + key + "' expects true or false");
}

}  // namespace

void apply_scene_setting(SceneConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "num_classes") {
    cfg.num_classes = integer(key, value);
    if (cfg.num_classes < 1) throw std::invalid_argument("scene config: num_classes must be >= 1");
    if (cfg.class_probs.size() != static_cast<std::size_t>(cfg.num_classes)) cfg.class_probs.clear();
    cfg.normalize();
  } else if (key.rfind("class.", 0) == 0) {
    const int k = integer(key, key.substr(6));
    if (k < 0) throw std::invalid_argument("scene config: class index must be >= 0");
    auto v = numbers(key, value, 12);
    SuperShapeParams p{{v[0], v[1], v[2], v[3], v[4], v[5]}, {v[6], v[7], v[8], v[9], v[10], v[11]}};
    while (static_cast<int>(cfg.class_presets.size()) <= k) {
      cfg.class_presets.push_back(builtin_class_preset(static_cast<int>(cfg.class_presets.size())));
    }
    cfg.class_presets[static_cast<std::size_t>(k)] = p;
  } else if (key == "class_probs") {
    cfg.class_probs = numbers(key, value);
  } else if (key == "objects_per_scene") {
    cfg.objects_per_scene = integer(key, value);
  } else if (key == "object_scale") {
    cfg.object_scale = number(key, value);
  } else if (key == "mesh_resolution") {
    cfg.mesh_resolution = integer(key, value);
  } else if (key == "occluder_prob") {
    cfg.occluder_prob = number(key, value);
  } else if (key == "occluder_m") {
    cfg.occluder_m = range(key, value);
  } else if (key == "occluder_ab") {
    cfg.occluder_ab = range(key, value);
  } else if (key == "occluder_n") {
    cfg.occluder_n = range(key, value);
  } else if (key == "occluder_scale") {
    cfg.occluder_scale = range(key, value);
  } else if (key == "occluder_resolution") {
    cfg.occluder_resolution = integer(key, value);
  } else if (key == "placement_radius") {
    cfg.placement_radius = number(key, value);
  } else if (key == "drop_height") {
    cfg.drop_height = range(key, value);
  } else if (key == "hue") {
    cfg.hue = range(key, value);
  } else if (key == "saturation") {
    cfg.saturation = range(key, value);
  } else if (key == "value") {
    cfg.value = range(key, value);
  } else if (key == "hemisphere_radius") {
    cfg.hemisphere_radius = range(key, value);
  } else if (key == "focal") {
    cfg.intrinsics.f = number(key, value);
  } else if (key == "cx") {
    cfg.intrinsics.cx = number(key, value);
  } else if (key == "cy") {
    cfg.intrinsics.cy = number(key, value);
  } else if (key == "width") {
    cfg.intrinsics.width = integer(key, value);
  } else if (key == "height") {
    cfg.intrinsics.height = integer(key, value);
  } else if (key == "images_per_scene") {
    cfg.images_per_scene = integer(key, value);
  } else if (key == "background") {
    auto v = numbers(key, value, 3);
    cfg.background = {v[0], v[1], v[2]};
  } else if (key == "ambient") {
    cfg.ambient = number(key, value);
  } else if (key == "min_visibility") {
    cfg.min_visibility = number(key, value);
  } else if (key == "amodal_boxes") {
    cfg.amodal_boxes = boolean(key, value);
  } else {
    throw std::invalid_argument("scene config: unknown key '" + key + "'");
  }
}

SceneConfig parse_scene_config(const std::string& text) {
  SceneConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("scene config line " + std::to_string(lineno) + ": expected key = value");
    }
    apply_scene_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.normalize();
  cfg.validate();
  return cfg;
}

SceneConfig load_scene_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scene_config(buf.str());
}

}  // namespace randstream
