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

#include "core/segment.h"

#include <cmath>
#include <cstdlib>
#include <deque>

#include "core/util.h"

namespace atl {

namespace {

bool NearBlack(Rgb c, int tolerance) {
  const int ceiling = 2 * tolerance;
  return c.r <= ceiling && c.g <= ceiling && c.b <= ceiling;
}

bool WithinTolerance(Rgb c, Rgb seed, int tol) {
  return std::abs(int(c.r) - int(seed.r)) <= tol &&
         std::abs(int(c.g) - int(seed.g)) <= tol &&
         std::abs(int(c.b) - int(seed.b)) <= tol;
}

}  // namespace

PixelMask FloodFillMask(const Image& image, int seed_u, int seed_v, int tolerance) {
  if (!image.InBounds(seed_v, seed_u)) {
    throw ContractViolation("FloodFillMask: seed out of bounds");
  }
  PixelMask mask;
  mask.height = image.height();
  mask.width = image.width();
  mask.on.assign(static_cast<size_t>(mask.height) * mask.width, 0);

  const Rgb seed_color = image.At(seed_v, seed_u);
  if (!NearBlack(seed_color, tolerance)) return mask;  // arm absent at seed

  std::deque<std::pair<int, int>> frontier;
  auto push = [&](int y, int x) {
    const size_t idx = static_cast<size_t>(y) * mask.width + x;
    if (mask.on[idx]) return;
    if (!WithinTolerance(image.At(y, x), seed_color, tolerance)) return;
    mask.on[idx] = 1;
    ++mask.count;
    if (mask.min_col < 0 || x < mask.min_col) mask.min_col = x;
    if (x > mask.max_col) mask.max_col = x;
    frontier.emplace_back(y, x);
  };
  push(seed_v, seed_u);
  while (!frontier.empty()) {
    auto [y, x] = frontier.front();
    frontier.pop_front();
    if (y > 0) push(y - 1, x);
    if (y + 1 < mask.height) push(y + 1, x);
    if (x > 0) push(y, x - 1);
    if (x + 1 < mask.width) push(y, x + 1);
  }
  return mask;
}

std::optional<int> ComputeSplitLine(const PixelMask& mask_left,
                                    const PixelMask& mask_right) {
  if (mask_left.height != mask_right.height || mask_left.width != mask_right.width) {
    throw ContractViolation("ComputeSplitLine: mask size mismatch");
  }
  if (mask_left.Empty() || mask_right.Empty()) return std::nullopt;
  if (mask_left.max_col >= mask_right.min_col) return std::nullopt;  // overlap
  return (mask_left.max_col + 1 + mask_right.min_col) / 2;
}

int FallbackCropWidth(int image_width) {
  return static_cast<int>((3 * static_cast<int64_t>(image_width) + 4) / 5);
}

SplitResult SplitObservation(const ObservationSet& obs, const SeedSpec& seeds) {
  const Image& high = obs.high;
  SplitResult result;

  const PixelMask mask_l = FloodFillMask(high, seeds.left_u, seeds.left_v,
                                         seeds.color_tolerance);
  const PixelMask mask_r = FloodFillMask(high, seeds.right_u, seeds.right_v,
                                         seeds.color_tolerance);
  // An arm cut by a side border has an unreliable horizontal extent.
  const bool truncated = mask_l.TouchesSideBorder() || mask_r.TouchesSideBorder();
  const auto split = ComputeSplitLine(mask_l, mask_r);

  if (split.has_value() && !truncated && *split > 0 && *split < high.width()) {
    result.method = SplitMethod::kFloodFill;
    result.split_column = *split;
    result.left_crop = CropColumns(high, 0, *split);
    result.right_crop = CropColumns(high, *split, high.width());
    return result;
  }
  const int fw = FallbackCropWidth(high.width());
  result.method = SplitMethod::kFallback;
  result.split_column = -1;
  result.left_crop = CropColumns(high, 0, fw);
  result.right_crop = CropColumns(high, high.width() - fw, high.width());
  return result;
}

std::pair<Image, Image> WristCrops(const ObservationSet& obs) {
  return {obs.left_wrist, obs.right_wrist};
}

}  // namespace atl
