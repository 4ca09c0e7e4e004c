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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/chain.h"
#include "core/render.h"
#include "core/rng.h"
#include "core/segment.h"
#include "core/util.h"
#include "oracles.h"

using namespace atl;

namespace {

Image SolidWithDisk(int size, Rgb bg, Rgb fg, int cy, int cx, int r) {
  Image img(size, size, bg);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) img.Set(y, x, fg);
    }
  }
  return img;
}

PixelMask MaskFromColumns(int h, int w, int c0, int c1) {
  PixelMask m;
  m.height = h;
  m.width = w;
  m.on.assign(static_cast<size_t>(h) * w, 0);
  for (int x = c0; x <= c1; ++x) {
    m.on[static_cast<size_t>(h / 2) * w + x] = 1;
    ++m.count;
  }
  m.min_col = c0;
  m.max_col = c1;
  return m;
}

}  // namespace

TEST_CASE("flood fill covers a solid black image completely") {
  Image img(10, 10, {0, 0, 0});
  const PixelMask m = FloodFillMask(img, 4, 7, 30);
  CHECK(m.count == 100);
  CHECK(m.min_col == 0);
  CHECK(m.max_col == 9);
}

TEST_CASE("flood fill of a disk equals the connected-component oracle") {
  const Image img = SolidWithDisk(40, {255, 255, 255}, {10, 10, 10}, 20, 14, 8);
  const PixelMask m = FloodFillMask(img, 14, 20, 30);
  const auto want = oracle::DilationConnectedComponent(img, 14, 20, 30);
  REQUIRE(m.on.size() == want.size());
  int disk = 0;
  for (size_t i = 0; i < want.size(); ++i) {
    CHECK(m.on[i] == want[i]);
    disk += want[i];
  }
  CHECK(m.count == disk);
  CHECK(disk > 0);
}

TEST_CASE("flood fill fails when the seed pixel is not near-black") {
  Image img(10, 10, {255, 255, 255});
  const PixelMask m = FloodFillMask(img, 5, 5, 30);
  CHECK(m.Empty());
  CHECK_THROWS_AS(FloodFillMask(img, 10, 0, 30), ContractViolation);
}

TEST_CASE("split line sits midway between the masks") {
  const PixelMask l = MaskFromColumns(16, 128, 0, 40);
  const PixelMask r = MaskFromColumns(16, 128, 80, 120);
  const auto split = ComputeSplitLine(l, r);
  REQUIRE(split.has_value());
  CHECK(*split == 60);
}

TEST_CASE("split line fails on overlap or empty masks") {
  const PixelMask l = MaskFromColumns(16, 128, 0, 70);
  const PixelMask r = MaskFromColumns(16, 128, 60, 120);
  CHECK_FALSE(ComputeSplitLine(l, r).has_value());
  PixelMask empty;
  empty.height = 16;
  empty.width = 128;
  empty.on.assign(16 * 128, 0);
  CHECK_FALSE(ComputeSplitLine(empty, r).has_value());
}

TEST_CASE("mirror-symmetric masks split exactly at the center") {
  const int w = 128, c = w / 2;
  for (int margin : {3, 17, 40}) {
    const PixelMask l = MaskFromColumns(16, w, 10, c - margin);
    const PixelMask r = MaskFromColumns(16, w, w - 1 - (c - margin), w - 1 - 10);
    const auto split = ComputeSplitLine(l, r);
    REQUIRE(split.has_value());
    CHECK(*split == c);
  }
}

TEST_CASE("well-separated arms use the flood-fill path and confine masks") {
  const KinematicChain left = DefaultLeftChain();
  const KinematicChain right = DefaultRightChain();
  const CameraRig rig = DefaultCameraRig(128);
  SceneConfig scene;
  // Arms reaching to their own sides.
  Joints jl = {60 * M_PI / 180, 60 * M_PI / 180, -60 * M_PI / 180, 0, 0, 0};
  Joints jr = {-60 * M_PI / 180, 60 * M_PI / 180, -60 * M_PI / 180, 0, 0, 0};
  const ObservationSet obs = RenderViews(left, jl, right, jr, 0.5, 0.5, rig, scene);
  const SeedSpec seeds = ComputeSeeds(rig.high, left, right);
  const SplitResult res = SplitObservation(obs, seeds);
  REQUIRE(res.method == SplitMethod::kFloodFill);
  // All left-mask pixels live strictly left of the split.
  const PixelMask ml = FloodFillMask(obs.high, seeds.left_u, seeds.left_v,
                                     seeds.color_tolerance);
  const PixelMask mr = FloodFillMask(obs.high, seeds.right_u, seeds.right_v,
                                     seeds.color_tolerance);
  CHECK(ml.max_col < res.split_column);
  CHECK(mr.min_col >= res.split_column);
  CHECK(res.left_crop.width() == res.split_column);
  CHECK(res.right_crop.width() == obs.high.width() - res.split_column);
}

TEST_CASE("overlapping arms fall back to 3/5 crops") {
  const KinematicChain left = DefaultLeftChain();
  const KinematicChain right = DefaultRightChain();
  const CameraRig rig = DefaultCameraRig(128);
  SceneConfig scene;
  // Both arms reach across the center plane; silhouettes cross in the image.
  Joints jl = {-90 * M_PI / 180, 70 * M_PI / 180, -20 * M_PI / 180, 0, 0, 0};
  Joints jr = {90 * M_PI / 180, 70 * M_PI / 180, -20 * M_PI / 180, 0, 0, 0};
  const ObservationSet obs = RenderViews(left, jl, right, jr, 0.5, 0.5, rig, scene);
  const SeedSpec seeds = ComputeSeeds(rig.high, left, right);
  const SplitResult res = SplitObservation(obs, seeds);
  CHECK(res.method == SplitMethod::kFallback);
  const int fw = FallbackCropWidth(obs.high.width());
  CHECK(fw == 77);  // ceil(3*128/5)
  CHECK(res.left_crop.width() == fw);
  CHECK(res.right_crop.width() == fw);
}

TEST_CASE("an arm leaving the frame forces the fallback path") {
  const KinematicChain left = DefaultLeftChain();
  const KinematicChain right = DefaultRightChain();
  const CameraRig rig = DefaultCameraRig(128);
  SceneConfig scene;
  // Swing the left arm to its J1 limit, extended horizontally: the distal
  // links exit the high-view frustum through a side border.
  Joints jl = {left.limits[0].hi, 0.0, -5 * M_PI / 180, 0, 0, 0};
  const ObservationSet obs =
      RenderViews(left, jl, right, right.home, 0.5, 0.5, rig, scene);
  const SeedSpec seeds = ComputeSeeds(rig.high, left, right);
  const PixelMask ml = FloodFillMask(obs.high, seeds.left_u, seeds.left_v,
                                     seeds.color_tolerance);
  CHECK(ml.TouchesSideBorder());
  const SplitResult res = SplitObservation(obs, seeds);
  CHECK(res.method == SplitMethod::kFallback);
}

TEST_CASE("wrist crops pass the wrist views through") {
  const KinematicChain left = DefaultLeftChain();
  const KinematicChain right = DefaultRightChain();
  const CameraRig rig = DefaultCameraRig(96);
  SceneConfig scene;
  const ObservationSet obs = RenderViews(left, left.home, right, right.home,
                                         0.2, 0.9, rig, scene);
  const auto [l, r] = WristCrops(obs);
  CHECK(l == obs.left_wrist);
  CHECK(r == obs.right_wrist);
  CHECK(l.width() == 96);
  CHECK(r.height() == 96);
}

TEST_CASE("split observation is deterministic and total on random renders") {
  const KinematicChain left = DefaultLeftChain();
  const KinematicChain right = DefaultRightChain();
  const CameraRig rig = DefaultCameraRig(128);
  SceneConfig scene;
  const SeedSpec seeds = ComputeSeeds(rig.high, left, right);
  Rng rng(4242);
  for (int i = 0; i < 30; ++i) {
    Joints jl, jr;
    for (int k = 0; k < kJointsPerArm; ++k) {
      jl[k] = rng.Uniform(left.limits[k].lo, left.limits[k].hi);
      jr[k] = rng.Uniform(right.limits[k].lo, right.limits[k].hi);
    }
    const ObservationSet obs = RenderViews(left, jl, right, jr, 0.5, 0.5, rig, scene);
    const SplitResult a = SplitObservation(obs, seeds);
    const SplitResult b = SplitObservation(obs, seeds);
    CHECK(a.method == b.method);
    CHECK(a.left_crop == b.left_crop);
    CHECK(a.right_crop == b.right_crop);
  }
}
