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

#include "core/chain.h"

#include <cmath>
#include <nlohmann/json.hpp>

#include "core/util.h"

namespace atl {

using nlohmann::json;

namespace {

constexpr double kDeg = M_PI / 180.0;

Quat AxisAngle(const Vec3& axis, double angle) {
  return Quat(Eigen::AngleAxisd(angle, axis));
}

json Vec3ToJson(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 Vec3FromJson(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError("chain spec: field '" + field + "' must be a 3-array");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

void KinematicChain::Validate() const {
  for (int i = 0; i < kJointsPerArm; ++i) {
    if (!(limits[i].lo < limits[i].hi)) {
      throw ConfigError("chain spec: joint " + std::to_string(i + 1) +
                        " limit lo >= hi");
    }
    const double n = links[i].axis.norm();
    if (std::abs(n - 1.0) > 1e-6) {
      throw ConfigError("chain spec: joint " + std::to_string(i + 1) +
                        " rotation_axis is not unit length");
    }
    if (!(links[i].length >= 0.0)) {
      throw ConfigError("chain spec: joint " + std::to_string(i + 1) +
                        " length is negative");
    }
  }
  if (!(gripper_max_open > 0.0)) {
    throw ConfigError("chain spec: gripper_range max must be > 0");
  }
  if (std::abs(base_pose.orientation.norm() - 1.0) > 1e-9) {
    throw ConfigError("chain spec: base_pose orientation not unit quaternion");
  }
  for (int i = 0; i < kJointsPerArm; ++i) {
    if (home[i] < limits[i].lo || home[i] > limits[i].hi) {
      throw ConfigError("chain spec: home joint " + std::to_string(i + 1) +
                        " outside limits");
    }
  }
}

JointVector14 PackAction(const Joints& left, double left_grip,
                         const Joints& right, double right_grip) {
  JointVector14 a;
  for (int i = 0; i < kJointsPerArm; ++i) a[i] = left[i];
  a[kLeftGripperIndex] = left_grip;
  for (int i = 0; i < kJointsPerArm; ++i) a[7 + i] = right[i];
  a[kRightGripperIndex] = right_grip;
  return a;
}

Joints LeftJoints(const JointVector14& a) {
  Joints j;
  for (int i = 0; i < kJointsPerArm; ++i) j[i] = a[i];
  return j;
}

Joints RightJoints(const JointVector14& a) {
  Joints j;
  for (int i = 0; i < kJointsPerArm; ++i) j[i] = a[7 + i];
  return j;
}

Pose3 ForwardKinematics(const KinematicChain& chain, const Joints& joints) {
  Pose3 t = chain.base_pose;
  for (int i = 0; i < kJointsPerArm; ++i) {
    const ChainLink& link = chain.links[i];
    t.position += t.orientation * link.offset;
    t.orientation = (t.orientation * AxisAngle(link.axis, joints[i])).normalized();
    if (link.length != 0.0) {
      t.position += t.orientation * Vec3(link.length, 0.0, 0.0);
    }
  }
  return t;
}

std::vector<Pose3> LinkFrames(const KinematicChain& chain, const Joints& joints) {
  std::vector<Pose3> frames;
  frames.reserve(kJointsPerArm + 1);
  Pose3 t = chain.base_pose;
  frames.push_back(t);
  for (int i = 0; i < kJointsPerArm; ++i) {
    const ChainLink& link = chain.links[i];
    t.position += t.orientation * link.offset;
    t.orientation = (t.orientation * AxisAngle(link.axis, joints[i])).normalized();
    if (link.length != 0.0) {
      t.position += t.orientation * Vec3(link.length, 0.0, 0.0);
    }
    frames.push_back(t);
  }
  return frames;
}

LimitCheck WithinLimits(const KinematicChain& chain, const Joints& joints) {
  LimitCheck c;
  for (int i = 0; i < kJointsPerArm; ++i) {
    c.joint_ok[i] = joints[i] >= chain.limits[i].lo && joints[i] <= chain.limits[i].hi;
    c.ok = c.ok && c.joint_ok[i];
  }
  return c;
}

Joints ClampToLimits(const KinematicChain& chain, const Joints& joints) {
  Joints out = joints;
  for (int i = 0; i < kJointsPerArm; ++i) {
    out[i] = std::clamp(out[i], chain.limits[i].lo, chain.limits[i].hi);
  }
  return out;
}

double ArmInterval(const KinematicChain& left, const Joints& jl,
                   const KinematicChain& right, const Joints& jr,
                   int points_per_link) {
  const Vec3 eef_l = ForwardKinematics(left, jl).position;
  const Vec3 eef_r = ForwardKinematics(right, jr).position;
  double best = (eef_l - eef_r).norm();
  if (points_per_link <= 1) return best;

  auto proxy_points = [&](const KinematicChain& chain, const Joints& j) {
    std::vector<Vec3> pts;
    Pose3 t = chain.base_pose;
    for (int i = 0; i < kJointsPerArm; ++i) {
      const ChainLink& link = chain.links[i];
      t.position += t.orientation * link.offset;
      t.orientation = (t.orientation * AxisAngle(link.axis, j[i])).normalized();
      if (link.length != 0.0) {
        const Vec3 root = t.position;
        t.position += t.orientation * Vec3(link.length, 0.0, 0.0);
        for (int s = 0; s < points_per_link; ++s) {
          const double u = static_cast<double>(s) / (points_per_link - 1);
          pts.push_back(root + u * (t.position - root));
        }
      }
    }
    return pts;
  };

  const auto pl = proxy_points(left, jl);
  const auto pr = proxy_points(right, jr);
  for (const Vec3& a : pl) {
    for (const Vec3& b : pr) {
      best = std::min(best, (a - b).norm());
    }
  }
  return best;
}

KinematicChain ChainFromJsonText(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("chain spec: JSON parse failure: ") + e.what());
  }
  KinematicChain chain;
  try {
    chain.name = j.at("name").get<std::string>();
    const auto& links = j.at("links");
    if (!links.is_array() || links.size() != kJointsPerArm) {
      throw ConfigError("chain spec: field 'links' must hold exactly 6 entries");
    }
    for (int i = 0; i < kJointsPerArm; ++i) {
      const auto& lj = links[i];
      chain.links[i].offset = Vec3FromJson(lj.at("offset"), "links.offset");
      chain.links[i].axis = Vec3FromJson(lj.at("rotation_axis"), "links.rotation_axis");
      chain.links[i].length = lj.at("length").get<double>();
      const auto& lim = lj.at("limit");
      if (!lim.is_array() || lim.size() != 2) {
        throw ConfigError("chain spec: field 'links.limit' must be [lo, hi]");
      }
      chain.limits[i].lo = lim[0].get<double>();
      chain.limits[i].hi = lim[1].get<double>();
      chain.home[i] = lj.value("home", 0.0);
    }
    const auto& base = j.at("base_pose");
    chain.base_pose.position = Vec3FromJson(base.at("position"), "base_pose.position");
    const auto& q = base.at("orientation_wxyz");
    if (!q.is_array() || q.size() != 4) {
      throw ConfigError("chain spec: field 'base_pose.orientation_wxyz' must be a 4-array");
    }
    chain.base_pose.orientation =
        Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
    if (std::abs(chain.base_pose.orientation.norm() - 1.0) > 1e-6) {
      throw ConfigError("chain spec: base_pose orientation not unit quaternion");
    }
    chain.base_pose.orientation.normalize();
    const auto& g = j.at("gripper_range");
    if (!g.is_array() || g.size() != 2 || g[0].get<double>() != 0.0) {
      throw ConfigError("chain spec: field 'gripper_range' must be [0, max_open]");
    }
    chain.gripper_max_open = g[1].get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("chain spec: missing or malformed field: ") + e.what());
  }
  chain.Validate();
  return chain;
}

KinematicChain LoadChain(const std::filesystem::path& spec_file) {
  return ChainFromJsonText(ReadFileBytes(spec_file));
}

std::string SerializeChain(const KinematicChain& chain) {
  json links = json::array();
  for (int i = 0; i < kJointsPerArm; ++i) {
    links.push_back({{"offset", Vec3ToJson(chain.links[i].offset)},
                     {"rotation_axis", Vec3ToJson(chain.links[i].axis)},
                     {"length", chain.links[i].length},
                     {"limit", json::array({chain.limits[i].lo, chain.limits[i].hi})},
                     {"home", chain.home[i]}});
  }
  const Quat& q = chain.base_pose.orientation;
  json j = {{"name", chain.name},
            {"links", links},
            {"base_pose",
             {{"position", Vec3ToJson(chain.base_pose.position)},
              {"orientation_wxyz", json::array({q.w(), q.x(), q.y(), q.z()})}}},
            {"gripper_range", json::array({0.0, chain.gripper_max_open})}};
  return j.dump(2);
}

std::string ChainHash(const KinematicChain& chain) {
  return Sha256Hex(SerializeChain(chain));
}

namespace {

KinematicChain BuildArm(const std::string& name, double base_y, double base_yaw,
                        double home_j1) {
  KinematicChain c;
  c.name = name;
  // Pedestal riser, yaw joint.
  c.links[0] = {Vec3(0.0, 0.0, 0.10), Vec3::UnitZ(), 0.0};
  // Shoulder pitch; positive angles pitch the link downward.
  c.links[1] = {Vec3(0.0, 0.0, 0.06), Vec3::UnitY(), 0.23};
  // Elbow; negative angles fold the forearm back up.
  c.links[2] = {Vec3::Zero(), Vec3::UnitY(), 0.23};
  // Wrist roll / pitch / roll.
  c.links[3] = {Vec3::Zero(), Vec3::UnitX(), 0.05};
  c.links[4] = {Vec3::Zero(), Vec3::UnitY(), 0.05};
  c.links[5] = {Vec3::Zero(), Vec3::UnitX(), 0.05};
  c.limits[0] = {-120.0 * kDeg, 180.0 * kDeg};
  c.limits[1] = {0.0, 210.0 * kDeg};
  c.limits[2] = {-180.0 * kDeg, 0.0};
  c.limits[3] = {-90.0 * kDeg, 90.0 * kDeg};
  c.limits[4] = {-90.0 * kDeg, 90.0 * kDeg};
  c.limits[5] = {-110.0 * kDeg, 110.0 * kDeg};
  c.base_pose.position = Vec3(0.49, base_y, 0.62);
  c.base_pose.orientation = AxisAngle(Vec3::UnitZ(), base_yaw);
  c.gripper_max_open = 0.08;
  // Stow pose: folded up and back, deliberately close to the J2/J3 range ends
  // so recorded trajectories visit those extremes at every episode start.
  c.home = {home_j1, 207.0 * kDeg, -177.0 * kDeg, 0.0, 0.0, 0.0};
  c.Validate();
  return c;
}

}  // namespace

KinematicChain DefaultLeftChain() {
  return BuildArm("desk_arm_left", 0.06, 60.0 * kDeg, 30.0 * kDeg);
}

KinematicChain DefaultRightChain() {
  return BuildArm("desk_arm_right", -0.06, -60.0 * kDeg, -30.0 * kDeg);
}

WorkspaceBox DefaultLeftWorkspace() {
  return WorkspaceBox{0.36, 0.70, -0.08, 0.41, 0.60, 1.00};
}

WorkspaceBox DefaultRightWorkspace() {
  return WorkspaceBox{0.36, 0.70, -0.41, 0.08, 0.60, 1.00};
}

}  // namespace atl
