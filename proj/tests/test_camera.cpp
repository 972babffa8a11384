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

#include <cmath>
#include <numbers>

#include "randstream/camera.hpp"
#include "randstream/scene.hpp"

using namespace randstream;

TEST_SUITE("camera") {
  TEST_CASE("hand-computed projection") {
    const Intrinsics k{500, 320, 256, 640, 512};
    const Camera cam = Camera::look_at({0, 0, 5}, {0, 0, 0}, 0, k);
    const PixelCoord p = object_to_pixel(cam, Eigen::Vector3d(0.5, 0, 0));
    CHECK(p.in_front);
    CHECK(std::abs(p.u - 370.0) < 1e-6);
    CHECK(std::abs(p.v - 256.0) < 1e-6);
    const PixelCoord c = object_to_pixel(cam, Eigen::Vector3d::Zero());
    CHECK(std::abs(c.u - 320.0) < 1e-9);
    CHECK(std::abs(c.v - 256.0) < 1e-9);
  }

  TEST_CASE("points on the optical axis land on the principal point") {
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
      const Eigen::Vector3d pos(uniform(rng, -10, 10), uniform(rng, -10, 10), uniform(rng, -10, 10));
      const Eigen::Vector3d target(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
      if ((pos - target).norm() < 0.5) continue;
      const Camera cam = Camera::look_at(pos, target, uniform(rng, 0, 6.28), {});
      const double t = uniform(rng, 0.1, 3.0);
      const PixelCoord p = object_to_pixel(cam, pos + t * (target - pos));
      REQUIRE(p.in_front);
      REQUIRE(std::abs(p.u - cam.intrinsics.cx) < 1e-9);
      REQUIRE(std::abs(p.v - cam.intrinsics.cy) < 1e-9);
    }
  }

  TEST_CASE("look_at builds a right-handed orthonormal frame") {
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
      const Eigen::Vector3d pos(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, 0.1, 5));
      const Camera cam = Camera::look_at(pos, Eigen::Vector3d::Zero(), uniform(rng, 0, 6.28), {});
      const Eigen::Matrix3d r = cam.world_to_camera;
      REQUIRE((r * r.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
      REQUIRE(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
      REQUIRE(cam.forward().dot(-pos.normalized()) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("zero roll keeps world up pointing up in the image") {
    const Camera cam = Camera::look_at({6, 0, 2}, {0, 0, 0}, 0, {});
    const PixelCoord below = object_to_pixel(cam, Eigen::Vector3d(0, 0, -0.5));
    const PixelCoord above = object_to_pixel(cam, Eigen::Vector3d(0, 0, 0.5));
    CHECK(above.v < below.v);
    CHECK(std::abs(above.u - below.u) < 1e-9);
  }

  TEST_CASE("points behind the camera are flagged") {
    const Camera cam = Camera::look_at({0, 0, 5}, {0, 0, 0}, 0, {});
    CHECK_FALSE(object_to_pixel(cam, Eigen::Vector3d(0, 0, 6)).in_front);
    CHECK_FALSE(object_to_pixel(cam, Eigen::Vector3d(0, 0, 5)).in_front);
    CHECK(object_to_pixel(cam, Eigen::Vector3d(0, 0, 4.9)).in_front);
    const std::vector<Eigen::Vector3d> pts{{0, 0, 0}, {0, 0, 7}};
    const auto many = object_to_pixel(cam, pts);
    REQUIRE(many.size() == 2);
    CHECK(many[0].in_front);
    CHECK_FALSE(many[1].in_front);
  }

  TEST_CASE("hemisphere directions are uniform by area") {
    // Area-uniform on the upper hemisphere: z ~ U(0, 1], so E[z] = 1/2,
    // E[z^2] = 1/3, E[x] = E[y] = 0.
    Rng rng(123);
    const int n = 200000;
    double sx = 0, sy = 0, sz = 0, szz = 0, zmin = 1;
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d d = sample_hemisphere(rng);
      REQUIRE(d.norm() == doctest::Approx(1.0).epsilon(1e-12));
      sx += d.x();
      sy += d.y();
      sz += d.z();
      szz += d.z() * d.z();
      zmin = std::min(zmin, d.z());
    }
    CHECK(zmin > 0);
    CHECK(std::abs(sx / n) < 0.005);
    CHECK(std::abs(sy / n) < 0.005);
    CHECK(std::abs(sz / n - 0.5) < 0.005);
    CHECK(std::abs(szz / n - 1.0 / 3.0) < 0.005);
  }

  TEST_CASE("sampled cameras sit on the hemisphere shell and look at the origin") {
    Rng rng(77);
    const CameraSampling cfg{6, 10, {}};
    for (int i = 0; i < 1000; ++i) {
      const Camera cam = sample_camera(rng, cfg);
      const double r = cam.position.norm();
      REQUIRE(r >= 6.0);
      REQUIRE(r <= 10.0);
      REQUIRE(cam.position.z() > 0);
      const PixelCoord o = object_to_pixel(cam, Eigen::Vector3d::Zero());
      REQUIRE(std::abs(o.u - cfg.intrinsics.cx) < 1e-9);
      REQUIRE(std::abs(o.v - cfg.intrinsics.cy) < 1e-9);
    }
  }
}
