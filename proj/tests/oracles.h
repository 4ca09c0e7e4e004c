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
//
// Independent test oracles. Each deliberately takes a different algorithmic
// route than the library implementation it checks.

#ifndef ATARALAB_TESTS_ORACLES_H_
#define ATARALAB_TESTS_ORACLES_H_

#include <optional>
#include <vector>

#include "core/chain.h"
#include "core/image.h"

namespace atl::oracle {

// Forward kinematics via explicit 4x4 homogeneous matrix products with
// Rodrigues' rotation formula (the library composes quaternions instead).
Eigen::Matrix4d FkHomogeneous(const KinematicChain& chain, const Joints& joints);
Vec3 FkPosition(const KinematicChain& chain, const Joints& joints);

// All joint-frame origins and link tips via the same matrix route.
std::vector<Vec3> LinkPoints(const KinematicChain& chain, const Joints& joints,
                             int samples_per_link);

// Naive sliding-window same-padded convolution, [C,H,W] maps, [O,C,k,k]
// weights, accumulation in double.
std::vector<float> NaiveConv2d(const std::vector<float>& x, int c, int h, int w,
                               const std::vector<float>& weight, int o, int k,
                               const std::vector<float>& bias, int dilation);

// Naive modulated deformable 3x3 convolution via per-location bilinear
// sampling in double precision.
std::vector<float> NaiveDeformConv(const std::vector<float>& x, int c, int h, int w,
                                   const std::vector<float>& weight, int o,
                                   const std::vector<float>& bias,
                                   const std::vector<float>& offsets,
                                   const std::vector<float>& mask);

// Dense affine-warp rotation about the grid center with bilinear sampling and
// zero padding, double precision.
std::vector<float> NaiveRotate(const std::vector<float>& x, int c, int h, int w,
                               double theta_degrees);

// O(T^2) generalized advantage estimation by direct double-loop summation:
//   A_t = sum_l (gamma*lambda)^l * delta_{t+l},  delta_t = r_t + gamma V_{t+1} - V_t.
// `values` has T+1 entries (bootstrap at the end).
std::vector<double> NaiveGae(const std::vector<double>& rewards,
                             const std::vector<double>& values, double gamma,
                             double lambda);

// Connected component containing the seed by iterated mask dilation to a
// fixpoint (the library uses a BFS frontier instead).
std::vector<uint8_t> DilationConnectedComponent(const Image& img, int seed_u,
                                                int seed_v, int tolerance);

// Direct 3x4 projection-matrix pinhole oracle.
std::optional<std::pair<double, double>> MatrixProject(
    const Eigen::Matrix3d& camera_rotation_world_from_cam, const Vec3& camera_pos,
    double fx, double fy, double cx, double cy, int width, int height,
    const Vec3& world_point);

}  // namespace atl::oracle

#endif  // ATARALAB_TESTS_ORACLES_H_
