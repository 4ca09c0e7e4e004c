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

#include "core/image.h"

#include <zlib.h>

#include <cmath>
#include <cstring>

#include "core/util.h"

namespace atl {

namespace {

void PutU32(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>((v >> 24) & 0xFF));
  s.push_back(static_cast<char>((v >> 16) & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
  s.push_back(static_cast<char>(v & 0xFF));
}

uint32_t GetU32(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) |
         uint32_t(p[3]);
}

void AppendChunk(std::string& out, const char type[4], const std::string& payload) {
  PutU32(out, static_cast<uint32_t>(payload.size()));
  std::string body(type, 4);
  body += payload;
  out += body;
  const uLong crc =
      crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()));
  PutU32(out, static_cast<uint32_t>(crc));
}

int PaethPredictor(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a);
  const int pb = std::abs(p - b);
  const int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

std::string EncodePng(const Image& img) {
  if (img.empty()) throw ContractViolation("EncodePng: empty image");
  const int h = img.height(), w = img.width();
  // Raw scanlines, filter type 0 per row.
  std::string raw;
  raw.reserve(static_cast<size_t>(h) * (1 + 3 * w));
  const auto& d = img.data();
  for (int y = 0; y < h; ++y) {
    raw.push_back('\0');
    raw.append(reinterpret_cast<const char*>(&d[3 * static_cast<size_t>(y) * w]),
               3 * static_cast<size_t>(w));
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::string compressed(bound, '\0');
  if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw IoError("EncodePng: deflate failure");
  }
  compressed.resize(bound);

  std::string out("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  PutU32(ihdr, static_cast<uint32_t>(w));
  PutU32(ihdr, static_cast<uint32_t>(h));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type: truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter method
  ihdr.push_back(0);   // no interlace
  AppendChunk(out, "IHDR", ihdr);
  AppendChunk(out, "IDAT", compressed);
  AppendChunk(out, "IEND", "");
  return out;
}

Image DecodePng(const std::string& bytes) {
  const auto* p = reinterpret_cast<const uint8_t*>(bytes.data());
  if (bytes.size() < 8 || std::memcmp(p, "\x89PNG\r\n\x1a\n", 8) != 0) {
    throw IoError("DecodePng: not a PNG stream");
  }
  size_t pos = 8;
  uint32_t w = 0, h = 0;
  int bit_depth = 0, color_type = 0;
  std::string idat;
  while (pos + 8 <= bytes.size()) {
    const uint32_t len = GetU32(p + pos);
    if (pos + 12 + len > bytes.size()) throw IoError("DecodePng: truncated chunk");
    const std::string type(bytes, pos + 4, 4);
    const uint8_t* payload = p + pos + 8;
    if (type == "IHDR") {
      w = GetU32(payload);
      h = GetU32(payload + 4);
      bit_depth = payload[8];
      color_type = payload[9];
      if (payload[12] != 0) throw IoError("DecodePng: interlaced PNG unsupported");
      if (bit_depth != 8 || (color_type != 0 && color_type != 2 && color_type != 6)) {
        throw IoError("DecodePng: only 8-bit gray/RGB/RGBA supported");
      }
    } else if (type == "IDAT") {
      idat.append(reinterpret_cast<const char*>(payload), len);
    } else if (type == "IEND") {
      break;
    }
    pos += 12 + len;
  }
  if (w == 0 || h == 0) throw IoError("DecodePng: missing IHDR");
  const int channels = color_type == 2 ? 3 : (color_type == 6 ? 4 : 1);
  const size_t stride = static_cast<size_t>(w) * channels;
  std::vector<uint8_t> raw(h * (stride + 1));
  uLongf raw_len = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_len, reinterpret_cast<const Bytef*>(idat.data()),
                 static_cast<uLong>(idat.size())) != Z_OK ||
      raw_len != raw.size()) {
    throw IoError("DecodePng: inflate failure");
  }

  std::vector<uint8_t> pixels(h * stride);
  for (uint32_t y = 0; y < h; ++y) {
    const uint8_t filter = raw[y * (stride + 1)];
    const uint8_t* src = &raw[y * (stride + 1) + 1];
    uint8_t* dst = &pixels[y * stride];
    const uint8_t* up = y > 0 ? &pixels[(y - 1) * stride] : nullptr;
    for (size_t i = 0; i < stride; ++i) {
      const int a = i >= static_cast<size_t>(channels) ? dst[i - channels] : 0;
      const int b = up ? up[i] : 0;
      const int c = (up && i >= static_cast<size_t>(channels)) ? up[i - channels] : 0;
      int v = src[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += PaethPredictor(a, b, c); break;
        default: throw IoError("DecodePng: unknown filter type");
      }
      dst[i] = static_cast<uint8_t>(v & 0xFF);
    }
  }

  Image img(static_cast<int>(h), static_cast<int>(w));
  for (uint32_t y = 0; y < h; ++y) {
    for (uint32_t x = 0; x < w; ++x) {
      const uint8_t* px = &pixels[y * stride + x * channels];
      if (channels == 1) {
        img.Set(y, x, {px[0], px[0], px[0]});
      } else {
        img.Set(y, x, {px[0], px[1], px[2]});
      }
    }
  }
  return img;
}

void WritePng(const std::filesystem::path& path, const Image& img) {
  WriteFileBytes(path, EncodePng(img));
}

Image ReadPng(const std::filesystem::path& path) {
  return DecodePng(ReadFileBytes(path));
}

Image ResizeImage(const Image& src, int out_h, int out_w) {
  if (src.height() == out_h && src.width() == out_w) return src;
  Image out(out_h, out_w);
  const double sy = static_cast<double>(src.height()) / out_h;
  const double sx = static_cast<double>(src.width()) / out_w;
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      // Average the source box mapped to this output pixel.
      const double y0 = y * sy, y1 = (y + 1) * sy;
      const double x0 = x * sx, x1 = (x + 1) * sx;
      double acc[3] = {0, 0, 0};
      double total = 0.0;
      for (int yy = static_cast<int>(std::floor(y0)); yy < std::ceil(y1); ++yy) {
        for (int xx = static_cast<int>(std::floor(x0)); xx < std::ceil(x1); ++xx) {
          if (yy < 0 || yy >= src.height() || xx < 0 || xx >= src.width()) continue;
          const double wy = std::min<double>(y1, yy + 1) - std::max<double>(y0, yy);
          const double wx = std::min<double>(x1, xx + 1) - std::max<double>(x0, xx);
          const double wgt = std::max(0.0, wy) * std::max(0.0, wx);
          const Rgb c = src.At(yy, xx);
          acc[0] += wgt * c.r;
          acc[1] += wgt * c.g;
          acc[2] += wgt * c.b;
          total += wgt;
        }
      }
      if (total <= 0.0) total = 1.0;
      out.Set(y, x,
              {static_cast<uint8_t>(std::lround(acc[0] / total)),
               static_cast<uint8_t>(std::lround(acc[1] / total)),
               static_cast<uint8_t>(std::lround(acc[2] / total))});
    }
  }
  return out;
}

Image CropColumns(const Image& src, int x0, int x1) {
  if (x0 < 0 || x1 > src.width() || x0 >= x1) {
    throw ContractViolation("CropColumns: invalid column range");
  }
  Image out(src.height(), x1 - x0);
  for (int y = 0; y < src.height(); ++y) {
    for (int x = x0; x < x1; ++x) out.Set(y, x - x0, src.At(y, x));
  }
  return out;
}

}  // namespace atl
