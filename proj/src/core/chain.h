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

#ifndef ATARALAB_CORE_CHAIN_H_
#define ATARALAB_CORE_CHAIN_H_

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace atl {

inline constexpr int kJointsPerArm = 6;
inline constexpr int kActionDim = 14;
inline constexpr int kLeftGripperIndex = 6;
inline constexpr int kRightGripperIndex = 13;

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;
using Joints = std::array<double, kJointsPerArm>;

// Rigid transform. Quaternion kept unit-norm (1e-9 tolerance on construction).
struct Pose3 {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  Pose3 operator*(const Pose3& rhs) const {
    return {position + orientation * rhs.position,
            (orientation * rhs.orientation).normalized()};
  }
  Vec3 Apply(const Vec3& p) const { return position + orientation * p; }
};

// One revolute link: translate by `offset` in the parent frame, rotate by the
// joint angle about `axis`, then extend `length` meters along the rotated
// local +x direction.
struct ChainLink {
  Vec3 offset = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  double length = 0.0;
};

struct JointLimit {
  double lo = 0.0;
  double hi = 0.0;
};

// 6-DoF revolute arm plus a parallel-jaw gripper.
struct KinematicChain {
  std::string name;
  std::array<ChainLink, kJointsPerArm> links;
  std::array<JointLimit, kJointsPerArm> limits;
  Pose3 base_pose;
  double gripper_max_open = 0.08;  // meters
  Joints home = {};                // stow configuration, inside limits

  void Validate() const;  // throws ConfigError on invariant violations
};

// The full 14-dim action layout:
//   [0..5] left joints (rad), [6] left gripper in [0,1],
//   [7..12] right joints (rad), [13] right gripper in [0,1].
using JointVector14 = std::array<double, kActionDim>;

JointVector14 PackAction(const Joints& left, double left_grip,
                         const Joints& right, double right_grip);
Joints LeftJoints(const JointVector14& a);
Joints RightJoints(const JointVector14& a);

// Forward kinematics: end-effector pose of the chain at `joints`. Pure.
Pose3 ForwardKinematics(const KinematicChain& chain, const Joints& joints);

// Frame origins along the chain: base, then each joint origin, then each link
// tip with length > 0 folded in; used by the renderer and interval proxies.
// Returns kJointsPerArm+1 poses: pose i = frame after link i-1 (pose 0 = frame
// at joint 0 before its rotation, i.e. pedestal top).
std::vector<Pose3> LinkFrames(const KinematicChain& chain, const Joints& joints);

struct LimitCheck {
  bool ok = true;
  std::array<bool, kJointsPerArm> joint_ok = {true, true, true, true, true, true};
};
// Closed-interval limit check; boundary values are valid.
LimitCheck WithinLimits(const KinematicChain& chain, const Joints& joints);

Joints ClampToLimits(const KinematicChain& chain, const Joints& joints);

// Minimum distance between the two arms, used as the collision guard.
// Default: distance between the two end-effector positions. With
// `points_per_link` > 0, also samples that many proxy points per link on both
// arms and returns the minimum pairwise distance (stricter guard).
double ArmInterval(const KinematicChain& left, const Joints& jl,
                   const KinematicChain& right, const Joints& jr,
                   int points_per_link = 0);

// Chain-description file io. Canonical serialization is stable across
// load/serialize round trips; its SHA-256 is the chain hash recorded in
// dataset manifests.
KinematicChain LoadChain(const std::filesystem::path& spec_file);
KinematicChain ChainFromJsonText(const std::string& text);
std::string SerializeChain(const KinematicChain& chain);
std::string ChainHash(const KinematicChain& chain);

// Built-in desk-scale dual-arm model.
KinematicChain DefaultLeftChain();
KinematicChain DefaultRightChain();

// Target end-effector workspace volume per arm.
struct WorkspaceBox {
  double x_lo = 0.36, x_hi = 0.70;
  double y_lo = -0.08, y_hi = 0.41;
  double z_lo = 0.60, z_hi = 1.00;

  bool Contains(const Vec3& p) const {
    return p.x() > x_lo && p.x() < x_hi && p.y() > y_lo && p.y() < y_hi &&
           p.z() > z_lo && p.z() < z_hi;
  }
  Vec3 Center() const {
    return {0.5 * (x_lo + x_hi), 0.5 * (y_lo + y_hi), 0.5 * (z_lo + z_hi)};
  }
};

WorkspaceBox DefaultLeftWorkspace();
WorkspaceBox DefaultRightWorkspace();

}  // namespace atl

#endif  // ATARALAB_CORE_CHAIN_H_
