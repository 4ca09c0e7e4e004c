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

#ifndef ATARALAB_CORE_RENDER_H_
#define ATARALAB_CORE_RENDER_H_

#include <optional>
#include <string>

#include "core/chain.h"
#include "core/image.h"
#include "core/segment.h"

namespace atl {

enum class CameraFrame { kWorld, kLeftWrist, kRightWrist };

// Pinhole camera. Local convention: +z forward, +x image-right, +y image-down.
// Wrist cameras interpret `pose` relative to their arm's end-effector frame
// and move rigidly with it.
struct CameraSpec {
  Pose3 pose;
  double fx = 160.0, fy = 160.0;
  double cx = 64.0, cy = 64.0;
  int height = 128, width = 128;
  CameraFrame attached_frame = CameraFrame::kWorld;
};

// Camera orientation looking from `eye` toward `target` (world frame),
// with world +z as the up reference.
Pose3 LookAt(const Vec3& eye, const Vec3& target);

struct SceneConfig {
  Rgb background = {197, 199, 204};
  uint64_t clutter_seed = 0;  // 0 = plain background
  Rgb arm_color = {12, 12, 12};
  double lighting = 1.0;  // scales background/clutter; arms stay near-black
};

struct CameraRig {
  CameraSpec high;
  CameraSpec left_wrist;
  CameraSpec right_wrist;
};

CameraRig DefaultCameraRig(int resolution = 128);

// Pinhole projection. Empty when the point is behind the near plane or
// projects outside the image bounds.
std::optional<std::pair<double, double>> ProjectPoint(const CameraSpec& camera,
                                                      const Pose3& camera_world_pose,
                                                      const Vec3& world_point);

// World pose of a camera given the current arm states.
Pose3 CameraWorldPose(const CameraSpec& camera, const KinematicChain& left,
                      const Joints& jl, const KinematicChain& right,
                      const Joints& jr);

// Rasterizes both arms into the three views. Deterministic: identical inputs
// produce bit-identical pixels. Arms are drawn as filled capsule projections
// per link; gripper opening appears as jaw separation.
ObservationSet RenderViews(const KinematicChain& left, const Joints& jl,
                           const KinematicChain& right, const Joints& jr,
                           double left_grip, double right_grip,
                           const CameraRig& rig, const SceneConfig& scene);

// Static pedestal reference point of an arm (top of the pedestal riser);
// its high-view projection is the flood-fill seed for that arm.
Vec3 PedestalPoint(const KinematicChain& chain);

// Flood-fill seeds for the high camera: projections of the two pedestal
// risers (midpoint of the riser column), clamped into the frame.
SeedSpec ComputeSeeds(const CameraSpec& high, const KinematicChain& left,
                      const KinematicChain& right, int color_tolerance = 30);

}  // namespace atl

#endif  // ATARALAB_CORE_RENDER_H_
