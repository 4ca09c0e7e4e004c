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

#ifndef ATARALAB_CORE_IMAGE_H_
#define ATARALAB_CORE_IMAGE_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace atl {

struct Rgb {
  uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

// 8-bit RGB raster, row-major.
class Image {
 public:
  Image() = default;
  Image(int height, int width, Rgb fill = {0, 0, 0})
      : h_(height), w_(width), data_(3 * static_cast<size_t>(height) * width) {
    Fill(fill);
  }

  int height() const { return h_; }
  int width() const { return w_; }
  bool empty() const { return data_.empty(); }

  Rgb At(int y, int x) const {
    const size_t i = 3 * (static_cast<size_t>(y) * w_ + x);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void Set(int y, int x, Rgb c) {
    const size_t i = 3 * (static_cast<size_t>(y) * w_ + x);
    data_[i] = c.r;
    data_[i + 1] = c.g;
    data_[i + 2] = c.b;
  }
  bool InBounds(int y, int x) const { return y >= 0 && y < h_ && x >= 0 && x < w_; }

  const std::vector<uint8_t>& data() const { return data_; }
  std::vector<uint8_t>& data() { return data_; }

  void Fill(Rgb c) {
    for (size_t i = 0; i + 2 < data_.size(); i += 3) {
      data_[i] = c.r;
      data_[i + 1] = c.g;
      data_[i + 2] = c.b;
    }
  }

  bool operator==(const Image&) const = default;

 private:
  int h_ = 0;
  int w_ = 0;
  std::vector<uint8_t> data_;
};

// Lossless 8-bit RGB PNG. Encoding is deterministic (fixed filter and zlib
// settings); decoding accepts any 8-bit RGB/RGBA/gray PNG with filters 0-4.
std::string EncodePng(const Image& img);
Image DecodePng(const std::string& bytes);
void WritePng(const std::filesystem::path& path, const Image& img);
Image ReadPng(const std::filesystem::path& path);

// Area-average resize to (out_h, out_w); exact for integer downscales,
// bilinear for upscales.
Image ResizeImage(const Image& src, int out_h, int out_w);

// Horizontal crop of columns [x0, x1).
Image CropColumns(const Image& src, int x0, int x1);

// The three synthetic camera views for one timestep.
struct ObservationSet {
  Image high;
  Image left_wrist;
  Image right_wrist;
};

}  // namespace atl

#endif  // ATARALAB_CORE_IMAGE_H_
