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

#include "randstream/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace randstream {

namespace {

struct ClipVertex {
  Eigen::Vector3d p;  // camera space
  Eigen::Vector3d n;  // world-space normal
};

struct ScreenVertex {
  double x, y;
  double inv_z;
  Eigen::Vector3d n_over_z;
};

// Keeps the part of the polygon with z >= near. At most 4 vertices out.
int clip_near(const std::array<ClipVertex, 3>& in, double near_plane, std::array<ClipVertex, 4>& out) {
  int count = 0;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& a = in[static_cast<std::size_t>(i)];
    const ClipVertex& b = in[static_cast<std::size_t>((i + 1) % 3)];
    const bool a_in = a.p.z() >= near_plane;
    const bool b_in = b.p.z() >= near_plane;
    if (a_in) out[static_cast<std::size_t>(count++)] = a;
    if (a_in != b_in) {
      const double t = (near_plane - a.p.z()) / (b.p.z() - a.p.z());
      ClipVertex v{a.p + t * (b.p - a.p), a.n + t * (b.n - a.n)};
      v.p.z() = near_plane;
      out[static_cast<std::size_t>(count++)] = v;
    }
  }
  return count;
}

double edge(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

// Of two triangles traversing a shared edge in opposite directions exactly
// one owns samples lying on it.
bool owns_edge(double ax, double ay, double bx, double by) {
  const double dy = by - ay;
  return dy > 0 || (dy == 0 && bx < ax);
}

// Calls fn(x, y, b0, b1, b2) for every covered pixel; barycentrics are in
// screen space with respect to the given vertex order.
template <typename Fn>
void scan_triangle(const ScreenVertex& v0, const ScreenVertex& v1, const ScreenVertex& v2, int width, int height,
                   Fn&& fn) {
  const double area = edge(v0.x, v0.y, v1.x, v1.y, v2.x, v2.y);
  if (area == 0 || !std::isfinite(area)) return;
  // Normalize to positive area; the swap is undone in the barycentrics.
  const ScreenVertex* a = &v0;
  const ScreenVertex* b = &v1;
  const ScreenVertex* c = &v2;
  const bool flipped = area < 0;
  if (flipped) std::swap(b, c);
  const double abs_area = std::abs(area);

  const double min_x = std::min({a->x, b->x, c->x}), max_x = std::max({a->x, b->x, c->x});
  const double min_y = std::min({a->y, b->y, c->y}), max_y = std::max({a->y, b->y, c->y});
  const int x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(max_x - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(max_y - 0.5)));
  if (x0 > x1 || y0 > y1) return;

  const bool own_bc = owns_edge(b->x, b->y, c->x, c->y);
  const bool own_ca = owns_edge(c->x, c->y, a->x, a->y);
  const bool own_ab = owns_edge(a->x, a->y, b->x, b->y);

  for (int y = y0; y <= y1; ++y) {
    const double py = y + 0.5;
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5;
      const double wa = edge(b->x, b->y, c->x, c->y, px, py);
      const double wb = edge(c->x, c->y, a->x, a->y, px, py);
      const double wc = edge(a->x, a->y, b->x, b->y, px, py);
      if (wa < 0 || wb < 0 || wc < 0) continue;
      if ((wa == 0 && !own_bc) || (wb == 0 && !own_ca) || (wc == 0 && !own_ab)) continue;
      const double ba = wa / abs_area, bb = wb / abs_area, bc = wc / abs_area;
      if (flipped) {
        fn(x, y, ba, bc, bb);
      } else {
        fn(x, y, ba, bb, bc);
      }
    }
  }
}

// Transforms, clips and projects every triangle of `inst`, calling
// fn(screen vertices[3], facing_camera) per emitted sub-triangle.
template <typename Fn>
void for_each_screen_triangle(const Camera& cam, const Instance& inst, double near_plane, Fn&& fn) {
  const Mesh& mesh = *inst.mesh;
  const Eigen::Matrix3d rot = inst.pose.rotation.toRotationMatrix();
  std::vector<Eigen::Vector3d> pc(mesh.vertices.size());
  std::vector<Eigen::Vector3d> nw(mesh.vertices.size());
  for (std::size_t k = 0; k < mesh.vertices.size(); ++k) {
    pc[k] = cam.to_camera(inst.to_world(mesh.vertices[k]));
    nw[k] = rot * mesh.normals[k].cast<double>();
  }
  const Intrinsics& in = cam.intrinsics;

  for (const auto& tri : mesh.triangles) {
    const std::array<ClipVertex, 3> cv{ClipVertex{pc[tri[0]], nw[tri[0]]}, ClipVertex{pc[tri[1]], nw[tri[1]]},
                                       ClipVertex{pc[tri[2]], nw[tri[2]]}};
    if (cv[0].p.z() < near_plane && cv[1].p.z() < near_plane && cv[2].p.z() < near_plane) continue;
    const Eigen::Vector3d g = (cv[1].p - cv[0].p).cross(cv[2].p - cv[0].p);
    const bool facing = g.dot(-cv[0].p) >= 0;

    std::array<ClipVertex, 4> poly;
    const int n = clip_near(cv, near_plane, poly);
    std::array<ScreenVertex, 4> sv;
    for (int k = 0; k < n; ++k) {
      const auto& v = poly[static_cast<std::size_t>(k)];
      const double inv_z = 1.0 / v.p.z();
      sv[static_cast<std::size_t>(k)] = {in.f * v.p.x() * inv_z + in.cx, in.f * v.p.y() * inv_z + in.cy, inv_z,
                                         v.n * inv_z};
    }
    for (int k = 1; k + 1 < n; ++k) {
      fn(sv[0], sv[static_cast<std::size_t>(k)], sv[static_cast<std::size_t>(k + 1)], facing);
    }
  }
}

std::uint8_t to_u8(double c) { return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0)); }

}  // namespace

FrameBuffers rasterize(const SceneSpec& s, const RenderOptions& opts) {
  const Intrinsics& in = s.camera.intrinsics;
  if (in.width <= 0 || in.height <= 0) throw std::invalid_argument("rasterize: empty image size");

  FrameBuffers fb;
  fb.width = in.width;
  fb.height = in.height;
  const std::size_t npix = static_cast<std::size_t>(in.width) * static_cast<std::size_t>(in.height);
  fb.depth.assign(npix, std::numeric_limits<float>::infinity());
  fb.ids.assign(npix, kEmptyPixel);
  fb.color.resize(npix * 3);
  const std::array<std::uint8_t, 3> bg{to_u8(opts.background.r), to_u8(opts.background.g), to_u8(opts.background.b)};
  for (std::size_t k = 0; k < npix; ++k) std::copy(bg.begin(), bg.end(), fb.color.begin() + 3 * k);

  // Depth is resolved in double per fragment, then stored as float.
  std::vector<double> zbuf(npix, std::numeric_limits<double>::infinity());
  const Eigen::Vector3d light = s.light_dir.normalized();

  for (const Instance& inst : s.instances) {
    if (!inst.mesh) continue;
    for_each_screen_triangle(
        s.camera, inst, opts.near_plane,
        [&](const ScreenVertex& a, const ScreenVertex& b, const ScreenVertex& c, bool facing) {
          scan_triangle(a, b, c, fb.width, fb.height, [&](int x, int y, double wa, double wb, double wc) {
            const double inv_z = wa * a.inv_z + wb * b.inv_z + wc * c.inv_z;
            const double z = 1.0 / inv_z;
            const std::size_t idx = fb.index(x, y);
            if (!(z < zbuf[idx])) return;
            zbuf[idx] = z;
            fb.depth[idx] = static_cast<float>(z);
            fb.ids[idx] = inst.id;

            Eigen::Vector3d n = (wa * a.n_over_z + wb * b.n_over_z + wc * c.n_over_z) * z;
            const double len = n.norm();
            n = len > 0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::Zero();
            if (!facing) n = -n;
            const double shade = opts.ambient + std::max(0.0, n.dot(light)) * (1.0 - opts.ambient);
            fb.color[3 * idx + 0] = to_u8(inst.albedo.r * shade);
            fb.color[3 * idx + 1] = to_u8(inst.albedo.g * shade);
            fb.color[3 * idx + 2] = to_u8(inst.albedo.b * shade);
          });
        });
  }
  return fb;
}

std::vector<std::uint8_t> coverage_mask(const Camera& cam, const Instance& inst, double near_plane) {
  const int w = cam.intrinsics.width, h = cam.intrinsics.height;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
  if (!inst.mesh) return mask;
  for_each_screen_triangle(cam, inst, near_plane,
                           [&](const ScreenVertex& a, const ScreenVertex& b, const ScreenVertex& c, bool) {
                             scan_triangle(a, b, c, w, h, [&](int x, int y, double, double, double) {
                               mask[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                                    static_cast<std::size_t>(x)] = 1;
                             });
                           });
  return mask;
}

namespace {

struct PixelBounds {
  int x0 = std::numeric_limits<int>::max();
  int y0 = std::numeric_limits<int>::max();
  int x1 = -1;
  int y1 = -1;
  std::int64_t count = 0;

  void add(int x, int y) {
    x0 = std::min(x0, x);
    y0 = std::min(y0, y);
    x1 = std::max(x1, x);
    y1 = std::max(y1, y);
    ++count;
  }
  Box box() const { return {double(x0), double(y0), double(x1 + 1), double(y1 + 1)}; }
};

}  // namespace

Annotations annotate(const SceneSpec& s, const FrameBuffers& fb, const AnnotateOptions& opts) {
  Annotations ann;
  for (const Instance& inst : s.instances) {
    if (inst.is_occluder()) continue;

    PixelBounds visible;
    for (int y = 0; y < fb.height; ++y) {
      for (int x = 0; x < fb.width; ++x) {
        if (fb.ids[fb.index(x, y)] == inst.id) visible.add(x, y);
      }
    }
    if (visible.count == 0) continue;

    const auto mask = coverage_mask(s.camera, inst);
    PixelBounds solo;
    for (int y = 0; y < fb.height; ++y) {
      for (int x = 0; x < fb.width; ++x) {
        if (mask[fb.index(x, y)]) solo.add(x, y);
      }
    }
    if (solo.count == 0) continue;

    ObjectAnnotation obj;
    obj.instance_id = inst.id;
    obj.class_id = inst.class_id;
    obj.visible_pixels = visible.count;
    obj.solo_pixels = solo.count;
    obj.visibility = std::clamp(static_cast<double>(visible.count) / static_cast<double>(solo.count), 0.0, 1.0);
    if (obj.visibility < opts.min_visibility) continue;
    obj.bbox = opts.amodal ? solo.box() : visible.box();
    ann.objects.push_back(obj);
  }
  return ann;
}

wire::Message emit_frame(const FrameBuffers& fb, const Annotations& ann) {
  const auto n = static_cast<std::uint32_t>(ann.objects.size());
  std::vector<float> boxes;
  std::vector<std::int64_t> cids;
  std::vector<float> vis;
  boxes.reserve(4 * n);
  for (const auto& o : ann.objects) {
    boxes.insert(boxes.end(), {float(o.bbox.x_min), float(o.bbox.y_min), float(o.bbox.x_max), float(o.bbox.y_max)});
    cids.push_back(o.class_id);
    vis.push_back(static_cast<float>(o.visibility));
  }

  wire::Message m;
  m.append("btid", ann.btid);
  m.append("frame", ann.frame);
  m.append("image", wire::Tensor::u8({static_cast<std::uint32_t>(fb.height), static_cast<std::uint32_t>(fb.width), 3},
                                     fb.color));
  m.append("bboxes", wire::Tensor::f32({n, 4}, boxes));
  m.append("cids", wire::Tensor::i64({n}, cids));
  m.append("vis", wire::Tensor::f32({n}, vis));
  return m;
}

Annotations read_annotations(const wire::Message& m) {
  Annotations ann;
  try {
    ann.btid = m.u64("btid");
    ann.frame = m.u64("frame");
    const auto& bt = m.tensor("bboxes");
    const auto& ct = m.tensor("cids");
    const auto& vt = m.tensor("vis");
    if (bt.dims.size() != 2 || bt.dims[1] != 4) throw std::invalid_argument("bboxes must be n x 4");
    const auto boxes = bt.as_f32();
    const auto cids = ct.as_i64();
    const auto vis = vt.as_f32();
    const std::size_t n = bt.dims[0];
    if (cids.size() != n || vis.size() != n) throw std::invalid_argument("annotation tensors disagree in length");
    for (std::size_t k = 0; k < n; ++k) {
      ObjectAnnotation o;
      o.instance_id = static_cast<std::int64_t>(k);
      o.class_id = cids[k];
      o.bbox = {boxes[4 * k], boxes[4 * k + 1], boxes[4 * k + 2], boxes[4 * k + 3]};
      o.visibility = vis[k];
      ann.objects.push_back(o);
    }
  } catch (const std::out_of_range& e) {
    throw std::invalid_argument(std::string("frame message: ") + e.what());
  } catch (const std::logic_error& e) {
    throw std::invalid_argument(std::string("frame message: ") + e.what());
  }
  return ann;
}

}  // namespace randstream
