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

#ifndef ATARALAB_CORE_CONVOPS_H_
#define ATARALAB_CORE_CONVOPS_H_

#include "core/tensor.h"

namespace atl::nn {

// Feature maps are [C, H, W] row-major.

// 3x3 (or kxk) same-padded convolution with dilation. x: [C,H,W],
// w: [O,C,k,k], b: [O] -> [O,H,W]. Zero padding.
Tensor Conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int dilation);

// 1x1 convolution. x: [C,H,W], w: [O,C], b: [O] -> [O,H,W].
Tensor Conv1x1(const Tensor& x, const Tensor& w, const Tensor& b);

// Modulated deformable 3x3 convolution (dilation 1, same padding).
// x: [C,H,W], w: [O,C,3,3], b: [O], offsets: [2k,H,W] with (dy,dx) pairs per
// tap in row-major tap order, mask: [k,H,W] in [0,1], k = 9.
// Sampling is bilinear with zeros outside the grid; gradients flow to x, w,
// b, offsets and mask.
Tensor DeformableConv2d(const Tensor& x, const Tensor& w, const Tensor& b,
                        const Tensor& offsets, const Tensor& mask);

// Rotation about the grid center by theta degrees (counterclockwise in
// (x, y-up) terms). 0/90/180/270 are exact index permutations; other angles
// resample bilinearly with zero padding.
Tensor RotateFeatureMap(const Tensor& x, double theta_degrees);

// Global average pooling: [C,H,W] -> [C].
Tensor GlobalAvgPool(const Tensor& x);

// Channel concatenation of equally sized maps: [Ci,H,W] -> [sum Ci,H,W].
Tensor ConcatChannels(const std::vector<Tensor>& parts);

// Token matrix [H*W, C] -> feature map [C,H,W]; row t maps to (y,x) = (t/W, t%W).
Tensor TokensToMap(const Tensor& tokens, int h, int w);

}  // namespace atl::nn

#endif  // ATARALAB_CORE_CONVOPS_H_
