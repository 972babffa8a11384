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

// Probabilistic scene composition. A scene holds class instances drawn from
// the current class probabilities, optional super-shape occluders, a
// directional light and a camera on the upper hemisphere. Objects are
// dropped onto the ground plane z = 0 by `settle`.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "randstream/camera.hpp"
#include "randstream/geometry.hpp"
#include "randstream/random.hpp"
#include "randstream/supershape.hpp"

namespace randstream {

inline constexpr std::int64_t kOccluderClass = -1;
inline constexpr int kSettleAttempts = 50;

struct Range {
  double lo = 0;
  double hi = 0;
  bool operator==(const Range&) const = default;
};

struct SceneConfig {
  int num_classes = 6;
  /// One preset per class; missing entries fall back to builtin_class_preset().
  std::vector<SuperShapeParams> class_presets;
  std::vector<double> class_probs;  // empty means uniform
  int objects_per_scene = 6;
  double object_scale = 0.5;
  int mesh_resolution = 32;

  double occluder_prob = 0.3;
  Range occluder_m{0, 12};
  Range occluder_ab{0.5, 2};
  Range occluder_n{0.5, 10};
  Range occluder_scale{0.3, 0.8};
  int occluder_resolution = 24;

  double placement_radius = 2.5;
  Range drop_height{0.5, 2.0};

  Range hue{0, 1};
  Range saturation{0.3, 1};
  Range value{0.4, 1};

  Range hemisphere_radius{6, 10};
  Intrinsics intrinsics;

  int images_per_scene = 4;
  Rgb background{0.25, 0.25, 0.25};
  double ambient = 0.2;
  double min_visibility = 0.05;
  bool amodal_boxes = false;

  /// Fills class_presets/class_probs to num_classes entries.
  void normalize();
  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

/// Fixed, distinct 12-parameter preset for class `k`.
SuperShapeParams builtin_class_preset(int k);

/// Parses `key = value` lines. Unknown keys are errors.
SceneConfig parse_scene_config(const std::string& text);
SceneConfig load_scene_config(const std::filesystem::path& path);
/// Applies one `key = value` override on top of an existing config.
void apply_scene_setting(SceneConfig& cfg, const std::string& key, const std::string& value);

struct Pose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

struct Instance {
  std::int64_t id = 0;
  std::int64_t class_id = kOccluderClass;
  std::shared_ptr<const Mesh> mesh;
  double scale = 1;
  Pose pose;
  Rgb albedo;
  bool overlap_flag = false;  // settle could not separate this instance

  bool is_occluder() const { return class_id == kOccluderClass; }
  Eigen::Vector3d to_world(const Eigen::Vector3f& local) const {
    return pose.rotation * (scale * local.cast<double>()) + pose.translation;
  }
};

struct SceneSpec {
  std::vector<Instance> instances;
  Eigen::Vector3d light_dir = Eigen::Vector3d::UnitZ();  // unit, towards the light
  Camera camera;
};

/// Uniform rotation on SO(3) from three uniforms (Shoemake's subgroup algorithm).
Eigen::Quaterniond sample_rotation(Rng& rng);

/// Direction uniform by area on the upper unit hemisphere.
Eigen::Vector3d sample_hemisphere(Rng& rng);

/// Drops every instance onto z = 0 and separates ground footprints. Each
/// instance, in order, is moved along z so its lowest vertex touches the
/// plane; if its bounding circle overlaps an earlier one the position is
/// resampled in the placement disk, up to kSettleAttempts times, after
/// which the overlap is kept and flagged.
SceneSpec settle(SceneSpec s, Rng& rng, double placement_radius);

/// Holds a validated config and the per-class meshes built from it.
class SceneSampler {
 public:
  explicit SceneSampler(SceneConfig cfg);

  const SceneConfig& config() const { return cfg_; }
  /// Throws std::invalid_argument if `probs` is not a distribution over the classes.
  void set_class_probs(const std::vector<double>& probs);

  SceneSpec sample(Rng& rng) const;
  /// New camera for the next image of an already settled scene.
  Camera sample_camera(Rng& rng) const;

 private:
  std::int64_t draw_class(Rng& rng) const;

  SceneConfig cfg_;
  std::vector<std::shared_ptr<const Mesh>> class_meshes_;
};

SceneSpec sample_scene(Rng& rng, const SceneConfig& cfg);

}  // namespace randstream
