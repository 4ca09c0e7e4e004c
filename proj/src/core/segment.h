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

#ifndef ATARALAB_CORE_SEGMENT_H_
#define ATARALAB_CORE_SEGMENT_H_

#include <optional>
#include <vector>

#include "core/image.h"

namespace atl {

// Flood-fill seed configuration for the high view. Seeds are the projections
// of the two static pedestal joints; they do not move with the arms.
struct SeedSpec {
  int left_u = 0, left_v = 0;
  int right_u = 0, right_v = 0;
  int color_tolerance = 30;  // per-channel, 8-bit units
};

struct PixelMask {
  int height = 0, width = 0;
  std::vector<uint8_t> on;  // 1 = filled
  int count = 0;
  int min_col = -1, max_col = -1;

  bool Empty() const { return count == 0; }
  bool Test(int y, int x) const { return on[static_cast<size_t>(y) * width + x] != 0; }
  bool TouchesSideBorder() const {
    return !Empty() && (min_col == 0 || max_col == width - 1);
  }
};

// 4-connected region of pixels within `tolerance` per channel of the seed
// pixel color. Returns an empty mask when the seed pixel is not near-black
// (the arm is absent at the seed). Seed out of bounds is a contract violation.
PixelMask FloodFillMask(const Image& image, int seed_u, int seed_v, int tolerance);

// Column midway between the rightmost column of the left mask and the
// leftmost column of the right mask. Empty on horizontal overlap or when
// either mask is empty.
std::optional<int> ComputeSplitLine(const PixelMask& mask_left,
                                    const PixelMask& mask_right);

enum class SplitMethod { kFloodFill, kFallback };

struct SplitResult {
  SplitMethod method = SplitMethod::kFallback;
  int split_column = -1;  // flood-fill method only
  Image left_crop;
  Image right_crop;
};

// Arm-decoupling operator on the high view. Flood-fill path yields crops
// [0, split) and [split, W). Any failure (seed not on an arm, overlapping
// masks, or an arm cut by the left/right image border) falls back to fixed
// crops of ceil(3W/5) columns anchored at each side.
SplitResult SplitObservation(const ObservationSet& obs, const SeedSpec& seeds);

// Wrist views pass through unchanged for the gripper heads.
std::pair<Image, Image> WristCrops(const ObservationSet& obs);

int FallbackCropWidth(int image_width);

}  // namespace atl

#endif  // ATARALAB_CORE_SEGMENT_H_
