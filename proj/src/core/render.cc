// Copyright 2026 The ataralab Authors
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

#include "core/render.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "core/rng.h"
#include "core/util.h"

namespace atl {

namespace {

constexpr double kNearPlane = 0.02;

struct Capsule {
  Vec3 a, b;       // world endpoints
  double radius;   // meters
  Rgb color;
};

// Arm silhouette: pedestal stub plus every positive-length link, plus the two
// gripper jaws whose separation is linear in the normalized opening.
void ArmCapsules(const KinematicChain& chain, const Joints& joints, double grip,
                 Rgb color, std::vector<Capsule>* out) {
  const auto frames = LinkFrames(chain, joints);
  // Pedestal riser: static column from the base to the shoulder.
  const Vec3 pedestal_base = chain.base_pose.position;
  const Vec3 shoulder =
      chain.base_pose.Apply(chain.links[0].offset + chain.links[1].offset);
  out->push_back({pedestal_base, shoulder, 0.030, color});

  Pose3 t = chain.base_pose;
  const double radii[kJointsPerArm] = {0.026, 0.022, 0.020, 0.015, 0.014, 0.013};
  for (int i = 0; i < kJointsPerArm; ++i) {
    const ChainLink& link = chain.links[i];
    t.position += t.orientation * link.offset;
    t.orientation =
        (t.orientation * Quat(Eigen::AngleAxisd(joints[i], link.axis))).normalized();
    if (link.length != 0.0) {
      const Vec3 root = t.position;
      t.position += t.orientation * Vec3(link.length, 0.0, 0.0);
      out->push_back({root, t.position, radii[i], color});
    }
  }
  // Jaws at the end-effector frame, separated along local y.
  const Pose3& eef = t;
  const double sep = 0.010 + std::clamp(grip, 0.0, 1.0) * chain.gripper_max_open;
  for (int side = -1; side <= 1; side += 2) {
    const Vec3 off = eef.orientation * Vec3(0.0, side * 0.5 * sep, 0.0);
    const Vec3 tip = eef.orientation * Vec3(0.045, 0.0, 0.0);
    out->push_back({eef.position + off, eef.position + off + tip, 0.0045, color});
  }
}

struct ProjectedCapsule {
  double u0, v0, r0;  // projected endpoint A and its pixel radius
  double u1, v1, r1;
  double depth;       // mean camera depth, for painter ordering
};

// Clips the segment against the near plane and projects it. Returns false if
// fully behind the camera.
bool ProjectCapsule(const CameraSpec& cam, const Pose3& cam_pose, const Capsule& c,
                    ProjectedCapsule* out) {
  const Quat inv = cam_pose.orientation.conjugate();
  Vec3 a = inv * (c.a - cam_pose.position);
  Vec3 b = inv * (c.b - cam_pose.position);
  if (a.z() < kNearPlane && b.z() < kNearPlane) return false;
  if (a.z() < kNearPlane || b.z() < kNearPlane) {
    const double t = (kNearPlane - a.z()) / (b.z() - a.z());
    const Vec3 hit = a + t * (b - a);
    if (a.z() < kNearPlane) a = hit; else b = hit;
  }
  out->u0 = cam.fx * a.x() / a.z() + cam.cx;
  out->v0 = cam.fy * a.y() / a.z() + cam.cy;
  out->r0 = cam.fx * c.radius / a.z();
  out->u1 = cam.fx * b.x() / b.z() + cam.cx;
  out->v1 = cam.fy * b.y() / b.z() + cam.cy;
  out->r1 = cam.fx * c.radius / b.z();
  out->depth = 0.5 * (a.z() + b.z());
  return true;
}

void RasterizeCapsule(const ProjectedCapsule& p, Rgb color, Image* img) {
  const double rmax = std::max(p.r0, p.r1);
  int x_lo = static_cast<int>(std::floor(std::min(p.u0, p.u1) - rmax - 1));
  int x_hi = static_cast<int>(std::ceil(std::max(p.u0, p.u1) + rmax + 1));
  int y_lo = static_cast<int>(std::floor(std::min(p.v0, p.v1) - rmax - 1));
  int y_hi = static_cast<int>(std::ceil(std::max(p.v0, p.v1) + rmax + 1));
  x_lo = std::max(x_lo, 0);
  y_lo = std::max(y_lo, 0);
  x_hi = std::min(x_hi, img->width() - 1);
  y_hi = std::min(y_hi, img->height() - 1);
  const double dx = p.u1 - p.u0, dy = p.v1 - p.v0;
  const double len2 = dx * dx + dy * dy;
  for (int y = y_lo; y <= y_hi; ++y) {
    for (int x = x_lo; x <= x_hi; ++x) {
      const double px = x - p.u0, py = y - p.v0;
      double t = len2 > 0.0 ? (px * dx + py * dy) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double ex = px - t * dx, ey = py - t * dy;
      const double r = p.r0 + t * (p.r1 - p.r0);
      if (ex * ex + ey * ey <= r * r) img->Set(y, x, color);
    }
  }
}

uint8_t ScaleChannel(uint8_t v, double s) {
  return static_cast<uint8_t>(std::clamp(std::lround(v * s), 0L, 255L));
}

void PaintBackground(const SceneConfig& scene, Image* img) {
  const Rgb bg = {ScaleChannel(scene.background.r, scene.lighting),
                  ScaleChannel(scene.background.g, scene.lighting),
                  ScaleChannel(scene.background.b, scene.lighting)};
  img->Fill(bg);
  if (scene.clutter_seed == 0) return;
  // Procedural clutter: axis-aligned blocks in non-arm colors.
  Rng rng(scene.clutter_seed);
  const int n = 6 + static_cast<int>(rng.Below(6));
  for (int k = 0; k < n; ++k) {
    const int w = 4 + static_cast<int>(rng.Below(img->width() / 4));
    const int h = 4 + static_cast<int>(rng.Below(img->height() / 4));
    const int x0 = static_cast<int>(rng.Below(std::max(1, img->width() - w)));
    const int y0 = static_cast<int>(rng.Below(std::max(1, img->height() - h)));
    // Channels kept above 96 so clutter can never pass the near-black test.
    const Rgb c = {static_cast<uint8_t>(96 + rng.Below(160)),
                   static_cast<uint8_t>(96 + rng.Below(160)),
                   static_cast<uint8_t>(96 + rng.Below(160))};
    const Rgb lit = {ScaleChannel(c.r, scene.lighting), ScaleChannel(c.g, scene.lighting),
                     ScaleChannel(c.b, scene.lighting)};
    for (int y = y0; y < std::min(img->height(), y0 + h); ++y) {
      for (int x = x0; x < std::min(img->width(), x0 + w); ++x) {
        img->Set(y, x, lit);
      }
    }
  }
}

Image RenderOneView(const CameraSpec& cam, const Pose3& cam_pose,
                    const std::vector<Capsule>& capsules, const SceneConfig& scene) {
  Image img(cam.height, cam.width);
  PaintBackground(scene, &img);
  std::vector<ProjectedCapsule> projected;
  projected.reserve(capsules.size());
  std::vector<Rgb> colors;
  for (const Capsule& c : capsules) {
    ProjectedCapsule p;
    if (ProjectCapsule(cam, cam_pose, c, &p)) {
      projected.push_back(p);
      colors.push_back(c.color);
    }
  }
  // Painter's algorithm: far to near by mean depth; stable order for ties.
  std::vector<size_t> order(projected.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return projected[a].depth > projected[b].depth;
  });
  for (size_t i : order) RasterizeCapsule(projected[i], colors[i], &img);
  return img;
}

}  // namespace

Pose3 LookAt(const Vec3& eye, const Vec3& target) {
  const Vec3 f = (target - eye).normalized();
  Vec3 r = f.cross(Vec3::UnitZ());
  if (r.norm() < 1e-9) r = Vec3::UnitY();  // looking straight up/down
  r.normalize();
  const Vec3 d = f.cross(r).normalized();  // image-down
  Eigen::Matrix3d m;
  m.col(0) = r;
  m.col(1) = d;
  m.col(2) = f;
  return {eye, Quat(m).normalized()};
}

CameraRig DefaultCameraRig(int resolution) {
  const double s = resolution;
  CameraRig rig;
  rig.high.pose = LookAt(Vec3(-0.62, 0.0, 1.42), Vec3(0.50, 0.0, 0.78));
  rig.high.fx = rig.high.fy = 1.05 * s;
  rig.high.cx = rig.high.cy = 0.5 * s;
  rig.high.height = rig.high.width = resolution;
  rig.high.attached_frame = CameraFrame::kWorld;

  // Wrist cameras sit behind and above the jaws, looking along the gripper.
  const Pose3 wrist_rel = {Vec3(-0.11, 0.0, 0.055),
                           LookAt(Vec3(-0.11, 0.0, 0.055), Vec3(0.05, 0.0, 0.0))
                               .orientation};
  rig.left_wrist.pose = wrist_rel;
  rig.left_wrist.fx = rig.left_wrist.fy = 1.0 * s;
  rig.left_wrist.cx = rig.left_wrist.cy = 0.5 * s;
  rig.left_wrist.height = rig.left_wrist.width = resolution;
  rig.left_wrist.attached_frame = CameraFrame::kLeftWrist;

  rig.right_wrist = rig.left_wrist;
  rig.right_wrist.attached_frame = CameraFrame::kRightWrist;
  return rig;
}

std::optional<std::pair<double, double>> ProjectPoint(const CameraSpec& camera,
                                                      const Pose3& camera_world_pose,
                                                      const Vec3& world_point) {
  const Vec3 p =
      camera_world_pose.orientation.conjugate() * (world_point - camera_world_pose.position);
  if (p.z() < kNearPlane) return std::nullopt;
  const double u = camera.fx * p.x() / p.z() + camera.cx;
  const double v = camera.fy * p.y() / p.z() + camera.cy;
  if (u < 0.0 || u >= camera.width || v < 0.0 || v >= camera.height) return std::nullopt;
  return std::make_pair(u, v);
}

Pose3 CameraWorldPose(const CameraSpec& camera, const KinematicChain& left,
                      const Joints& jl, const KinematicChain& right,
                      const Joints& jr) {
  switch (camera.attached_frame) {
    case CameraFrame::kWorld:
      return camera.pose;
    case CameraFrame::kLeftWrist:
      return ForwardKinematics(left, jl) * camera.pose;
    case CameraFrame::kRightWrist:
      return ForwardKinematics(right, jr) * camera.pose;
  }
  return camera.pose;
}

ObservationSet RenderViews(const KinematicChain& left, const Joints& jl,
                           const KinematicChain& right, const Joints& jr,
                           double left_grip, double right_grip,
                           const CameraRig& rig, const SceneConfig& scene) {
  std::vector<Capsule> capsules;
  ArmCapsules(left, jl, left_grip, scene.arm_color, &capsules);
  ArmCapsules(right, jr, right_grip, scene.arm_color, &capsules);

  ObservationSet obs;
  obs.high = RenderOneView(rig.high, CameraWorldPose(rig.high, left, jl, right, jr),
                           capsules, scene);
  obs.left_wrist =
      RenderOneView(rig.left_wrist, CameraWorldPose(rig.left_wrist, left, jl, right, jr),
                     capsules, scene);
  obs.right_wrist =
      RenderOneView(rig.right_wrist, CameraWorldPose(rig.right_wrist, left, jl, right, jr),
                     capsules, scene);
  return obs;
}

Vec3 PedestalPoint(const KinematicChain& chain) {
  return chain.base_pose.Apply(chain.links[0].offset);
}

SeedSpec ComputeSeeds(const CameraSpec& high, const KinematicChain& left,
                      const KinematicChain& right, int color_tolerance) {
  SeedSpec seeds;
  seeds.color_tolerance = color_tolerance;
  auto place = [&](const KinematicChain& chain, int* u, int* v) {
    // Midpoint of the pedestal riser column (base to shoulder), static.
    const Vec3 a = chain.base_pose.position;
    const Vec3 b = chain.base_pose.Apply(chain.links[0].offset + chain.links[1].offset);
    const Vec3 mid = 0.5 * (a + b);
    const Quat inv = high.pose.orientation.conjugate();
    const Vec3 p = inv * (mid - high.pose.position);
    const double z = std::max(p.z(), kNearPlane);
    *u = static_cast<int>(std::clamp(std::lround(high.fx * p.x() / z + high.cx), 0L,
                                     static_cast<long>(high.width - 1)));
    *v = static_cast<int>(std::clamp(std::lround(high.fy * p.y() / z + high.cy), 0L,
                                     static_cast<long>(high.height - 1)));
  };
  place(left, &seeds.left_u, &seeds.left_v);
  place(right, &seeds.right_u, &seeds.right_v);
  return seeds;
}

}  // namespace atl
