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

#include "randstream/scene.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace randstream {

namespace {

using std::numbers::pi;

constexpr double kProbTolerance = 1e-6;

// Presets normalized to unit bounding radius before use.
const SuperShapeParams kBuiltinPresets[] = {
    {{4, 1, 1, 10, 10, 10}, {4, 1, 1, 10, 10, 10}},   // rounded box
    {{0, 1, 1, 1, 1, 1}, {4, 1, 1, 100, 100, 100}},   // cylinder
    {{5, 1, 1, 2, 7, 7}, {0, 1, 1, 2, 2, 2}},         // star prism
    {{4, 1, 1, 1, 1, 1}, {4, 1, 1, 1, 1, 1}},         // octahedron
    {{3, 1, 1, 0.5, 0.5, 0.5}, {2, 1, 1, 1, 1, 1}},   // three-lobed
    {{12, 1, 1, 15, 15, 15}, {2, 1, 1, 2, 2, 2}},     // gear
};
constexpr int kNumBuiltinPresets = static_cast<int>(std::size(kBuiltinPresets));

std::shared_ptr<const Mesh> unit_mesh(const SuperShapeParams& p, int res) {
  Mesh m = supershape_mesh(p, res, res);
  const double r = m.bounding_radius();
  if (r > 0) m.scale(1.0 / r);
  return std::make_shared<const Mesh>(std::move(m));
}

void check(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("scene config: " + what);
}

void check_range(const Range& r, const std::string& name) {
  check(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi, name + " must be a finite range lo <= hi");
}

void check_probs(const std::vector<double>& probs, std::size_t k) {
  check(probs.size() == k, "class_probs must have one entry per class");
  double sum = 0;
  for (double p : probs) {
    check(std::isfinite(p) && p >= 0, "class_probs entries must be >= 0");
    sum += p;
  }
  check(std::abs(sum - 1.0) <= kProbTolerance, "class_probs must sum to 1");
}

Eigen::Vector2d sample_disk(Rng& rng, double radius) {
  const double rho = radius * std::sqrt(uniform01(rng));
  const double angle = 2.0 * pi * uniform01(rng);
  return {rho * std::cos(angle), rho * std::sin(angle)};
}

Rgb sample_albedo(Rng& rng, const SceneConfig& cfg) {
  const double h = uniform(rng, cfg.hue.lo, cfg.hue.hi);
  const double s = uniform(rng, cfg.saturation.lo, cfg.saturation.hi);
  const double v = uniform(rng, cfg.value.lo, cfg.value.hi);
  return hsv_to_rgb(h, s, v);
}

SuperFormula sample_formula(Rng& rng, const SceneConfig& cfg) {
  SuperFormula f;
  f.m = uniform(rng, cfg.occluder_m.lo, cfg.occluder_m.hi);
  f.a = uniform(rng, cfg.occluder_ab.lo, cfg.occluder_ab.hi);
  f.b = uniform(rng, cfg.occluder_ab.lo, cfg.occluder_ab.hi);
  f.n1 = uniform(rng, cfg.occluder_n.lo, cfg.occluder_n.hi);
  f.n2 = uniform(rng, cfg.occluder_n.lo, cfg.occluder_n.hi);
  f.n3 = uniform(rng, cfg.occluder_n.lo, cfg.occluder_n.hi);
  return f;
}

struct Footprint {
  double min_z;   // lowest vertex relative to the translation
  double radius;  // horizontal bounding circle about the translation
};

Footprint footprint(const Instance& inst) {
  Footprint fp{std::numeric_limits<double>::infinity(), 0};
  for (const auto& v : inst.mesh->vertices) {
    const Eigen::Vector3d p = inst.pose.rotation * (inst.scale * v.cast<double>());
    fp.min_z = std::min(fp.min_z, p.z());
    fp.radius = std::max(fp.radius, p.head<2>().norm());
  }
  if (inst.mesh->vertices.empty()) fp.min_z = 0;
  return fp;
}

}  // namespace

SuperShapeParams builtin_class_preset(int k) {
  if (k < 0) throw std::invalid_argument("class index must be >= 0");
  SuperShapeParams p = kBuiltinPresets[k % kNumBuiltinPresets];
  // Classes beyond the builtin table get more lobes so every preset stays distinct.
  const int cycle = k / kNumBuiltinPresets;
  p.longitude.m += 2 * cycle;
  return p;
}

void SceneConfig::normalize() {
  while (static_cast<int>(class_presets.size()) < num_classes) {
    class_presets.push_back(builtin_class_preset(static_cast<int>(class_presets.size())));
  }
  if (class_presets.size() > static_cast<std::size_t>(std::max(num_classes, 0))) {
    class_presets.resize(static_cast<std::size_t>(std::max(num_classes, 0)));
  }
  if (class_probs.empty() && num_classes > 0) {
    class_probs.assign(static_cast<std::size_t>(num_classes), 1.0 / num_classes);
  }
}

void SceneConfig::validate() const {
  check(num_classes >= 1, "num_classes must be >= 1");
  check(class_presets.size() == static_cast<std::size_t>(num_classes), "one class preset per class required");
  for (const auto& p : class_presets) check(p.valid(), "class presets need finite parameters with a, b, n1 != 0");
  check_probs(class_probs, static_cast<std::size_t>(num_classes));
  check(objects_per_scene >= 0, "objects_per_scene must be >= 0");
  check(object_scale > 0, "object_scale must be > 0");
  check(mesh_resolution >= 4 && occluder_resolution >= 4, "mesh resolutions must be >= 4");
  check(occluder_prob >= 0 && occluder_prob <= 1, "occluder_prob must be in [0, 1]");
  check_range(occluder_m, "occluder_m");
  check_range(occluder_ab, "occluder_ab");
  check_range(occluder_n, "occluder_n");
  check_range(occluder_scale, "occluder_scale");
  check(occluder_ab.lo > 0 && occluder_n.lo > 0, "occluder a, b and n ranges must exclude 0");
  check(occluder_scale.lo > 0, "occluder_scale must be > 0");
  check(placement_radius >= 0, "placement_radius must be >= 0");
  check_range(drop_height, "drop_height");
  check_range(hue, "hue");
  check_range(saturation, "saturation");
  check_range(value, "value");
  check_range(hemisphere_radius, "hemisphere_radius");
  check(hemisphere_radius.lo > 0, "hemisphere radius must be > 0");
  check(intrinsics.width >= 16 && intrinsics.height >= 16, "image width and height must be >= 16");
  check(intrinsics.f > 0, "focal length must be > 0");
  check(images_per_scene >= 1, "images_per_scene must be >= 1");
  check(ambient >= 0 && ambient <= 1, "ambient must be in [0, 1]");
  check(min_visibility >= 0 && min_visibility <= 1, "min_visibility must be in [0, 1]");
}

Eigen::Quaterniond sample_rotation(Rng& rng) {
  const double u1 = uniform01(rng), u2 = uniform01(rng), u3 = uniform01(rng);
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  Eigen::Quaterniond q(b * std::cos(2 * pi * u3),   // w
                       a * std::sin(2 * pi * u2),   // x
                       a * std::cos(2 * pi * u2),   // y
                       b * std::sin(2 * pi * u3));  // z
  q.normalize();
  return q;
}

Eigen::Vector3d sample_hemisphere(Rng& rng) {
  // Archimedes: z uniform gives uniform area; (0, 1] keeps the camera above the plane.
  const double z = 1.0 - uniform01(rng);
  const double angle = 2.0 * pi * uniform01(rng);
  const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {rho * std::cos(angle), rho * std::sin(angle), z};
}

SceneSpec settle(SceneSpec s, Rng& rng, double placement_radius) {
  std::vector<Eigen::Vector2d> centers;
  std::vector<double> radii;
  for (auto& inst : s.instances) {
    const Footprint fp = footprint(inst);
    inst.pose.translation.z() = -fp.min_z;

    auto overlaps = [&](const Eigen::Vector2d& c) {
      for (std::size_t k = 0; k < centers.size(); ++k) {
        if ((c - centers[k]).norm() < fp.radius + radii[k]) return true;
      }
      return false;
    };
    Eigen::Vector2d c = inst.pose.translation.head<2>();
    int attempt = 0;
    while (overlaps(c) && attempt < kSettleAttempts) {
      c = sample_disk(rng, placement_radius);
      ++attempt;
    }
    inst.overlap_flag = overlaps(c);
    inst.pose.translation.head<2>() = c;
    centers.push_back(c);
    radii.push_back(fp.radius);
  }
  return s;
}

SceneSampler::SceneSampler(SceneConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.normalize();
  cfg_.validate();
  class_meshes_.reserve(cfg_.class_presets.size());
  for (const auto& p : cfg_.class_presets) class_meshes_.push_back(unit_mesh(p, cfg_.mesh_resolution));
}

void SceneSampler::set_class_probs(const std::vector<double>& probs) {
  check_probs(probs, class_meshes_.size());
  double sum = 0;
  for (double p : probs) sum += p;
  cfg_.class_probs = probs;
  for (auto& p : cfg_.class_probs) p /= sum;
}

std::int64_t SceneSampler::draw_class(Rng& rng) const {
  const double u = uniform01(rng);
  double acc = 0;
  std::int64_t last_positive = 0;
  for (std::size_t k = 0; k < cfg_.class_probs.size(); ++k) {
    if (cfg_.class_probs[k] <= 0) continue;
    acc += cfg_.class_probs[k];
    last_positive = static_cast<std::int64_t>(k);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

Camera SceneSampler::sample_camera(Rng& rng) const {
  return randstream::sample_camera(rng, {cfg_.hemisphere_radius.lo, cfg_.hemisphere_radius.hi, cfg_.intrinsics});
}

SceneSpec SceneSampler::sample(Rng& rng) const {
  SceneSpec s;
  std::int64_t next_id = 0;

  auto place = [&](Instance& inst) {
    inst.pose.rotation = sample_rotation(rng);
    const Eigen::Vector2d xy = sample_disk(rng, cfg_.placement_radius);
    inst.pose.translation = {xy.x(), xy.y(), uniform(rng, cfg_.drop_height.lo, cfg_.drop_height.hi)};
    inst.albedo = sample_albedo(rng, cfg_);
  };

  for (int i = 0; i < cfg_.objects_per_scene; ++i) {
    Instance obj;
    obj.id = next_id++;
    obj.class_id = draw_class(rng);
    obj.mesh = class_meshes_[static_cast<std::size_t>(obj.class_id)];
    obj.scale = cfg_.object_scale;
    place(obj);
    s.instances.push_back(std::move(obj));

    if (uniform01(rng) < cfg_.occluder_prob) {
      Instance occ;
      occ.id = next_id++;
      occ.class_id = kOccluderClass;
      SuperShapeParams p{sample_formula(rng, cfg_), sample_formula(rng, cfg_)};
      occ.mesh = unit_mesh(p, cfg_.occluder_resolution);
      occ.scale = uniform(rng, cfg_.occluder_scale.lo, cfg_.occluder_scale.hi);
      place(occ);
      s.instances.push_back(std::move(occ));
    }
  }

  s.light_dir = sample_hemisphere(rng);
  s.camera = sample_camera(rng);
  return settle(std::move(s), rng, cfg_.placement_radius);
}

SceneSpec sample_scene(Rng& rng, const SceneConfig& cfg) { return SceneSampler(cfg).sample(rng); }

}  // namespace randstream
