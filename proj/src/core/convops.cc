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

#include "core/convops.h"

#include <Eigen/Dense>
#include <cmath>

#include "core/util.h"

namespace atl::nn {

namespace {

using MatMap = Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>;
using ConstMatMap = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic,
                                                   Eigen::Dynamic, Eigen::RowMajor>>;

std::shared_ptr<Node> NewNode(std::vector<int> shape) {
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value.resize(static_cast<size_t>(n->NumEl()));
  return n;
}

void CheckMap(const Tensor& x, const char* who) {
  if (x.shape().size() != 3) throw ContractViolation(std::string(who) + ": need [C,H,W]");
}

}  // namespace

Tensor Conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int dilation) {
  CheckMap(x, "Conv2d");
  if (w.shape().size() != 4 || w.shape()[1] != x.shape()[0] ||
      w.shape()[2] != w.shape()[3]) {
    throw ContractViolation("Conv2d: weight must be [O,C,k,k] with matching C");
  }
  const int c = x.shape()[0], h = x.shape()[1], wd = x.shape()[2];
  const int o = w.shape()[0], k = w.shape()[2];
  if (b.numel() != o) throw ContractViolation("Conv2d: bias size mismatch");
  if (dilation < 1) throw ContractViolation("Conv2d: dilation must be >= 1");
  const int half = (k - 1) / 2;
  const int kk = k * k;
  const int patch_len = c * kk;

  // im2col with gather order (c, ky, kx), matching the [O,C,k,k] weight layout.
  auto patches = std::make_shared<std::vector<float>>(
      static_cast<size_t>(h) * wd * patch_len, 0.0f);
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < wd; ++xx) {
      float* p = &(*patches)[(static_cast<size_t>(y) * wd + xx) * patch_len];
      for (int ci = 0; ci < c; ++ci) {
        const float* plane = &x.value()[static_cast<size_t>(ci) * h * wd];
        for (int ky = 0; ky < k; ++ky) {
          const int sy = y + (ky - half) * dilation;
          for (int kx = 0; kx < k; ++kx) {
            const int sx = xx + (kx - half) * dilation;
            float v = 0.0f;
            if (sy >= 0 && sy < h && sx >= 0 && sx < wd) {
              v = plane[static_cast<size_t>(sy) * wd + sx];
            }
            p[ci * kk + ky * k + kx] = v;
          }
        }
      }
    }
  }

  auto out = NewNode({o, h, wd});
  {
    ConstMatMap mp(patches->data(), h * wd, patch_len);
    ConstMatMap mw(w.value().data(), o, patch_len);
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> prod =
        mp * mw.transpose();  // [HW, O]
    for (int oi = 0; oi < o; ++oi) {
      float* plane = &out->value[static_cast<size_t>(oi) * h * wd];
      const float bias = b.value()[oi];
      for (int i = 0; i < h * wd; ++i) plane[i] = prod(i, oi) + bias;
    }
  }

  auto node = out;
  if (GradEnabled() && (x.node()->requires_grad || w.node()->requires_grad ||
                        b.node()->requires_grad)) {
    node->requires_grad = true;
    node->parents = {x.ptr(), w.ptr(), b.ptr()};
    node->backprop = [c, h, wd, o, k, dilation, half, kk, patch_len, patches](Node& on) {
      Node* px = on.parents[0].get();
      Node* pw = on.parents[1].get();
      Node* pb = on.parents[2].get();
      // d_out as [HW, O]
      std::vector<float> gout(static_cast<size_t>(h) * wd * o);
      for (int oi = 0; oi < o; ++oi) {
        const float* plane = &on.grad[static_cast<size_t>(oi) * h * wd];
        for (int i = 0; i < h * wd; ++i) gout[static_cast<size_t>(i) * o + oi] = plane[i];
      }
      ConstMatMap mg(gout.data(), h * wd, o);
      if (pb->requires_grad) {
        float* gb = pb->GradData();
        for (int oi = 0; oi < o; ++oi) {
          double acc = 0.0;
          for (int i = 0; i < h * wd; ++i) acc += gout[static_cast<size_t>(i) * o + oi];
          gb[oi] += static_cast<float>(acc);
        }
      }
      if (pw->requires_grad) {
        ConstMatMap mp(patches->data(), h * wd, patch_len);
        MatMap gw(pw->GradData(), o, patch_len);
        gw.noalias() += mg.transpose() * mp;
      }
      if (px->requires_grad) {
        ConstMatMap mw(pw->value.data(), o, patch_len);
        Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> gp =
            mg * mw;  // [HW, patch_len]
        float* gx = px->GradData();
        for (int y = 0; y < h; ++y) {
          for (int xx = 0; xx < wd; ++xx) {
            const float* p = &gp(static_cast<Eigen::Index>(y) * wd + xx, 0);
            for (int ci = 0; ci < c; ++ci) {
              for (int ky = 0; ky < k; ++ky) {
                const int sy = y + (ky - half) * dilation;
                if (sy < 0 || sy >= h) continue;
                for (int kx = 0; kx < k; ++kx) {
                  const int sx = xx + (kx - half) * dilation;
                  if (sx < 0 || sx >= wd) continue;
                  gx[(static_cast<size_t>(ci) * h + sy) * wd + sx] +=
                      p[ci * kk + ky * k + kx];
                }
              }
            }
          }
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor Conv1x1(const Tensor& x, const Tensor& w, const Tensor& b) {
  CheckMap(x, "Conv1x1");
  if (w.shape().size() != 2 || w.shape()[1] != x.shape()[0]) {
    throw ContractViolation("Conv1x1: weight must be [O,C]");
  }
  const int c = x.shape()[0], h = x.shape()[1], wd = x.shape()[2];
  const int o = w.shape()[0];
  if (b.numel() != o) throw ContractViolation("Conv1x1: bias size mismatch");
  auto out = NewNode({o, h, wd});
  // x viewed as [C, HW]: out[o] = w[o,:] * x + b
  ConstMatMap mx(x.value().data(), c, h * wd);
  ConstMatMap mw(w.value().data(), o, c);
  MatMap mo(out->value.data(), o, h * wd);
  mo.noalias() = mw * mx;
  for (int oi = 0; oi < o; ++oi) mo.row(oi).array() += b.value()[oi];

  auto node = out;
  if (GradEnabled() && (x.node()->requires_grad || w.node()->requires_grad ||
                        b.node()->requires_grad)) {
    node->requires_grad = true;
    node->parents = {x.ptr(), w.ptr(), b.ptr()};
    node->backprop = [c, h, wd, o](Node& on) {
      Node* px = on.parents[0].get();
      Node* pw = on.parents[1].get();
      Node* pb = on.parents[2].get();
      ConstMatMap mg(on.grad.data(), o, h * wd);
      if (pb->requires_grad) {
        float* gb = pb->GradData();
        for (int oi = 0; oi < o; ++oi) gb[oi] += mg.row(oi).sum();
      }
      if (pw->requires_grad) {
        ConstMatMap mx(px->value.data(), c, h * wd);
        MatMap gw(pw->GradData(), o, c);
        gw.noalias() += mg * mx.transpose();
      }
      if (px->requires_grad) {
        ConstMatMap mw(pw->value.data(), o, c);
        MatMap gx(px->GradData(), c, h * wd);
        gx.noalias() += mw.transpose() * mg;
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor DeformableConv2d(const Tensor& x, const Tensor& w, const Tensor& b,
                        const Tensor& offsets, const Tensor& mask) {
  CheckMap(x, "DeformableConv2d");
  constexpr int k = 3, kk = 9;
  const int c = x.shape()[0], h = x.shape()[1], wd = x.shape()[2];
  if (w.shape().size() != 4 || w.shape()[1] != c || w.shape()[2] != k ||
      w.shape()[3] != k) {
    throw ContractViolation("DeformableConv2d: weight must be [O,C,3,3]");
  }
  const int o = w.shape()[0];
  if (b.numel() != o) throw ContractViolation("DeformableConv2d: bias size mismatch");
  if (offsets.shape() != std::vector<int>{2 * kk, h, wd}) {
    throw ContractViolation("DeformableConv2d: offsets must be [18,H,W]");
  }
  if (mask.shape() != std::vector<int>{kk, h, wd}) {
    throw ContractViolation("DeformableConv2d: mask must be [9,H,W]");
  }
  const int patch_len = c * kk;
  const int hw = h * wd;

  // Bilinear sample record per (position, tap): corner indices and weights.
  struct TapSample {
    float sy, sx;       // fractional source position
    int y0, x0;         // top-left corner (may be out of bounds)
    float wy, wx;       // fractional parts
  };
  auto samples = std::make_shared<std::vector<TapSample>>(static_cast<size_t>(hw) * kk);
  // Modulated sampled patches, gather order (c, tap) to match [O,C,3,3].
  auto patches = std::make_shared<std::vector<float>>(
      static_cast<size_t>(hw) * patch_len, 0.0f);
  // Unmodulated samples, needed for the mask gradient.
  auto raw = std::make_shared<std::vector<float>>(static_cast<size_t>(hw) * patch_len,
                                                  0.0f);

  auto bilinear = [&](const float* plane, const TapSample& s) -> float {
    float v = 0.0f;
    const float w00 = (1.0f - s.wy) * (1.0f - s.wx);
    const float w01 = (1.0f - s.wy) * s.wx;
    const float w10 = s.wy * (1.0f - s.wx);
    const float w11 = s.wy * s.wx;
    const bool in_y0 = s.y0 >= 0 && s.y0 < h;
    const bool in_y1 = s.y0 + 1 >= 0 && s.y0 + 1 < h;
    const bool in_x0 = s.x0 >= 0 && s.x0 < wd;
    const bool in_x1 = s.x0 + 1 >= 0 && s.x0 + 1 < wd;
    if (in_y0 && in_x0) v += w00 * plane[static_cast<size_t>(s.y0) * wd + s.x0];
    if (in_y0 && in_x1) v += w01 * plane[static_cast<size_t>(s.y0) * wd + s.x0 + 1];
    if (in_y1 && in_x0) v += w10 * plane[static_cast<size_t>(s.y0 + 1) * wd + s.x0];
    if (in_y1 && in_x1) v += w11 * plane[static_cast<size_t>(s.y0 + 1) * wd + s.x0 + 1];
    return v;
  };

  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < wd; ++xx) {
      const int pos = y * wd + xx;
      for (int t = 0; t < kk; ++t) {
        const int ky = t / k - 1, kx = t % k - 1;
        const float dy = offsets.value()[(static_cast<size_t>(2 * t) * h + y) * wd + xx];
        const float dx =
            offsets.value()[(static_cast<size_t>(2 * t + 1) * h + y) * wd + xx];
        TapSample s;
        s.sy = y + ky + dy;
        s.sx = xx + kx + dx;
        s.y0 = static_cast<int>(std::floor(s.sy));
        s.x0 = static_cast<int>(std::floor(s.sx));
        s.wy = s.sy - s.y0;
        s.wx = s.sx - s.x0;
        (*samples)[static_cast<size_t>(pos) * kk + t] = s;
        const float m = mask.value()[(static_cast<size_t>(t) * h + y) * wd + xx];
        for (int ci = 0; ci < c; ++ci) {
          const float* plane = &x.value()[static_cast<size_t>(ci) * hw];
          const float v = bilinear(plane, s);
          (*raw)[(static_cast<size_t>(pos)) * patch_len + ci * kk + t] = v;
          (*patches)[(static_cast<size_t>(pos)) * patch_len + ci * kk + t] = v * m;
        }
      }
    }
  }

  auto out = NewNode({o, h, wd});
  {
    ConstMatMap mp(patches->data(), hw, patch_len);
    ConstMatMap mw(w.value().data(), o, patch_len);
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> prod =
        mp * mw.transpose();
    for (int oi = 0; oi < o; ++oi) {
      float* plane = &out->value[static_cast<size_t>(oi) * hw];
      const float bias = b.value()[oi];
      for (int i = 0; i < hw; ++i) plane[i] = prod(i, oi) + bias;
    }
  }

  auto node = out;
  if (GradEnabled() &&
      (x.node()->requires_grad || w.node()->requires_grad || b.node()->requires_grad ||
       offsets.node()->requires_grad || mask.node()->requires_grad)) {
    node->requires_grad = true;
    node->parents = {x.ptr(), w.ptr(), b.ptr(), offsets.ptr(), mask.ptr()};
    node->backprop = [c, h, wd, o, hw, patch_len, samples, patches, raw](Node& on) {
      constexpr int k2 = 3, kk2 = 9;
      Node* px = on.parents[0].get();
      Node* pw = on.parents[1].get();
      Node* pb = on.parents[2].get();
      Node* po = on.parents[3].get();
      Node* pm = on.parents[4].get();

      std::vector<float> gout(static_cast<size_t>(hw) * o);
      for (int oi = 0; oi < o; ++oi) {
        const float* plane = &on.grad[static_cast<size_t>(oi) * hw];
        for (int i = 0; i < hw; ++i) gout[static_cast<size_t>(i) * o + oi] = plane[i];
      }
      ConstMatMap mg(gout.data(), hw, o);
      if (pb->requires_grad) {
        float* gb = pb->GradData();
        for (int oi = 0; oi < o; ++oi) {
          double acc = 0.0;
          for (int i = 0; i < hw; ++i) acc += gout[static_cast<size_t>(i) * o + oi];
          gb[oi] += static_cast<float>(acc);
        }
      }
      if (pw->requires_grad) {
        ConstMatMap mp(patches->data(), hw, patch_len);
        MatMap gw(pw->GradData(), o, patch_len);
        gw.noalias() += mg.transpose() * mp;
      }
      const bool need_x = px->requires_grad;
      const bool need_off = po->requires_grad;
      const bool need_mask = pm->requires_grad;
      if (!need_x && !need_off && !need_mask) return;

      // d_patch = gout * W : [HW, patch_len]
      ConstMatMap mw(pw->value.data(), o, patch_len);
      Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> gp =
          mg * mw;
      float* gx = need_x ? px->GradData() : nullptr;
      float* go = need_off ? po->GradData() : nullptr;
      float* gm = need_mask ? pm->GradData() : nullptr;

      for (int y = 0; y < h; ++y) {
        for (int xx = 0; xx < wd; ++xx) {
          const int pos = y * wd + xx;
          for (int t = 0; t < kk2; ++t) {
            const auto& s = (*samples)[static_cast<size_t>(pos) * kk2 + t];
            const float m =
                pm->value[(static_cast<size_t>(t) * h + y) * wd + xx];
            const bool in_y0 = s.y0 >= 0 && s.y0 < h;
            const bool in_y1 = s.y0 + 1 >= 0 && s.y0 + 1 < h;
            const bool in_x0 = s.x0 >= 0 && s.x0 < wd;
            const bool in_x1 = s.x0 + 1 >= 0 && s.x0 + 1 < wd;
            const float w00 = (1.0f - s.wy) * (1.0f - s.wx);
            const float w01 = (1.0f - s.wy) * s.wx;
            const float w10 = s.wy * (1.0f - s.wx);
            const float w11 = s.wy * s.wx;
            double g_dy = 0.0, g_dx = 0.0, g_m = 0.0;
            for (int ci = 0; ci < c; ++ci) {
              const float gpatch = gp(pos, ci * kk2 + t);
              if (gpatch == 0.0f && !need_mask) continue;
              const float* plane = &px->value[static_cast<size_t>(ci) * hw];
              const float v00 =
                  (in_y0 && in_x0) ? plane[static_cast<size_t>(s.y0) * wd + s.x0] : 0.0f;
              const float v01 = (in_y0 && in_x1)
                                    ? plane[static_cast<size_t>(s.y0) * wd + s.x0 + 1]
                                    : 0.0f;
              const float v10 = (in_y1 && in_x0)
                                    ? plane[static_cast<size_t>(s.y0 + 1) * wd + s.x0]
                                    : 0.0f;
              const float v11 =
                  (in_y1 && in_x1)
                      ? plane[static_cast<size_t>(s.y0 + 1) * wd + s.x0 + 1]
                      : 0.0f;
              if (need_mask) {
                g_m += double(gpatch) *
                       (*raw)[static_cast<size_t>(pos) * patch_len + ci * kk2 + t];
              }
              const float gv = gpatch * m;  // gradient into the raw sample
              if (need_x && gv != 0.0f) {
                float* gplane = &gx[static_cast<size_t>(ci) * hw];
                if (in_y0 && in_x0)
                  gplane[static_cast<size_t>(s.y0) * wd + s.x0] += gv * w00;
                if (in_y0 && in_x1)
                  gplane[static_cast<size_t>(s.y0) * wd + s.x0 + 1] += gv * w01;
                if (in_y1 && in_x0)
                  gplane[static_cast<size_t>(s.y0 + 1) * wd + s.x0] += gv * w10;
                if (in_y1 && in_x1)
                  gplane[static_cast<size_t>(s.y0 + 1) * wd + s.x0 + 1] += gv * w11;
              }
              if (need_off) {
                // d(sample)/d(sy) and d(sample)/d(sx) of bilinear interpolation.
                const float dvdy = (v10 - v00) * (1.0f - s.wx) + (v11 - v01) * s.wx;
                const float dvdx = (v01 - v00) * (1.0f - s.wy) + (v11 - v10) * s.wy;
                g_dy += double(gv) * dvdy;
                g_dx += double(gv) * dvdx;
              }
            }
            if (need_off) {
              go[(static_cast<size_t>(2 * t) * h + y) * wd + xx] +=
                  static_cast<float>(g_dy);
              go[(static_cast<size_t>(2 * t + 1) * h + y) * wd + xx] +=
                  static_cast<float>(g_dx);
            }
            if (need_mask) {
              gm[(static_cast<size_t>(t) * h + y) * wd + xx] += static_cast<float>(g_m);
            }
          }
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor RotateFeatureMap(const Tensor& x, double theta_degrees) {
  CheckMap(x, "RotateFeatureMap");
  const int c = x.shape()[0], h = x.shape()[1], wd = x.shape()[2];
  auto out = NewNode({c, h, wd});

  // Normalize angle.
  double th = std::fmod(theta_degrees, 360.0);
  if (th < 0) th += 360.0;

  // Exact index permutations for multiples of 90 degrees.
  const bool exact = std::abs(th - std::round(th / 90.0) * 90.0) < 1e-12 &&
                     (std::abs(std::remainder(th, 90.0)) < 1e-12);
  // Map from output cell to source cell weights: either a permutation or a
  // 4-corner bilinear stencil; cached for backward.
  struct Stencil {
    int idx[4];
    float w[4];
    int n;
  };
  auto stencils = std::make_shared<std::vector<Stencil>>(static_cast<size_t>(h) * wd);

  const double cy = 0.5 * (h - 1), cx = 0.5 * (wd - 1);
  const double rad = th * M_PI / 180.0;
  // To fill output at (y,x), sample input at the point that rotates onto it:
  // inverse rotation by theta. Image y grows downward, so a positive theta
  // (counterclockwise with y up) uses the transpose in (x, y-down) coords.
  const double ct = std::cos(rad), st = std::sin(rad);
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < wd; ++xx) {
      const double dx = xx - cx, dy = y - cy;
      const double sx = cx + ct * dx + st * dy;
      const double sy = cy - st * dx + ct * dy;
      Stencil& s = (*stencils)[static_cast<size_t>(y) * wd + xx];
      s.n = 0;
      if (exact) {
        const long ix = std::lround(sx), iy = std::lround(sy);
        if (ix >= 0 && ix < wd && iy >= 0 && iy < h) {
          s.idx[s.n] = static_cast<int>(iy) * wd + static_cast<int>(ix);
          s.w[s.n] = 1.0f;
          ++s.n;
        }
        continue;
      }
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const float fx = static_cast<float>(sx - x0);
      const float fy = static_cast<float>(sy - y0);
      const float ws[4] = {(1 - fy) * (1 - fx), (1 - fy) * fx, fy * (1 - fx), fy * fx};
      const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
      const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
      for (int i = 0; i < 4; ++i) {
        if (ys[i] >= 0 && ys[i] < h && xs[i] >= 0 && xs[i] < wd && ws[i] != 0.0f) {
          s.idx[s.n] = ys[i] * wd + xs[i];
          s.w[s.n] = ws[i];
          ++s.n;
        }
      }
    }
  }

  const int hw = h * wd;
  for (int ci = 0; ci < c; ++ci) {
    const float* in = &x.value()[static_cast<size_t>(ci) * hw];
    float* o = &out->value[static_cast<size_t>(ci) * hw];
    for (int p = 0; p < hw; ++p) {
      const Stencil& s = (*stencils)[p];
      float v = 0.0f;
      for (int i = 0; i < s.n; ++i) v += s.w[i] * in[s.idx[i]];
      o[p] = v;
    }
  }

  return Tensor([&] {
    auto node = out;
    if (GradEnabled() && x.node()->requires_grad) {
      node->requires_grad = true;
      node->parents = {x.ptr()};
      node->backprop = [c, hw, stencils](Node& on) {
        Node* px = on.parents[0].get();
        if (!px->requires_grad) return;
        float* gx = px->GradData();
        for (int ci = 0; ci < c; ++ci) {
          const float* go = &on.grad[static_cast<size_t>(ci) * hw];
          float* g = &gx[static_cast<size_t>(ci) * hw];
          for (int p = 0; p < hw; ++p) {
            const auto& s = (*stencils)[p];
            for (int i = 0; i < s.n; ++i) g[s.idx[i]] += s.w[i] * go[p];
          }
        }
      };
    }
    return node;
  }());
}

Tensor GlobalAvgPool(const Tensor& x) {
  CheckMap(x, "GlobalAvgPool");
  const int c = x.shape()[0], hw = x.shape()[1] * x.shape()[2];
  auto out = NewNode({c});
  for (int ci = 0; ci < c; ++ci) {
    double acc = 0.0;
    const float* plane = &x.value()[static_cast<size_t>(ci) * hw];
    for (int i = 0; i < hw; ++i) acc += plane[i];
    out->value[ci] = static_cast<float>(acc / hw);
  }
  return Tensor([&] {
    auto node = out;
    if (GradEnabled() && x.node()->requires_grad) {
      node->requires_grad = true;
      node->parents = {x.ptr()};
      node->backprop = [c, hw](Node& on) {
        Node* px = on.parents[0].get();
        if (!px->requires_grad) return;
        float* gx = px->GradData();
        for (int ci = 0; ci < c; ++ci) {
          const float g = on.grad[ci] / hw;
          float* plane = &gx[static_cast<size_t>(ci) * hw];
          for (int i = 0; i < hw; ++i) plane[i] += g;
        }
      };
    }
    return node;
  }());
}

Tensor ConcatChannels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractViolation("ConcatChannels: empty input");
  const int h = parts[0].shape()[1], wd = parts[0].shape()[2];
  int c = 0;
  bool needs_grad = false;
  for (const Tensor& p : parts) {
    CheckMap(p, "ConcatChannels");
    if (p.shape()[1] != h || p.shape()[2] != wd) {
      throw ContractViolation("ConcatChannels: spatial size mismatch");
    }
    c += p.shape()[0];
    needs_grad = needs_grad || p.node()->requires_grad;
  }
  auto out = NewNode({c, h, wd});
  size_t at = 0;
  for (const Tensor& p : parts) {
    std::copy(p.value().begin(), p.value().end(), out->value.begin() + at);
    at += p.value().size();
  }
  if (GradEnabled() && needs_grad) {
    out->requires_grad = true;
    for (const Tensor& p : parts) out->parents.push_back(p.ptr());
    out->backprop = [](Node& on) {
      size_t at = 0;
      for (auto& parent : on.parents) {
        const size_t sz = parent->value.size();
        if (parent->requires_grad) {
          float* g = parent->GradData();
          for (size_t i = 0; i < sz; ++i) g[i] += on.grad[at + i];
        }
        at += sz;
      }
    };
  }
  return Tensor(std::move(out));
}

Tensor TokensToMap(const Tensor& tokens, int h, int w) {
  if (tokens.shape().size() != 2 || tokens.shape()[0] != h * w) {
    throw ContractViolation("TokensToMap: token count mismatch");
  }
  const int c = tokens.shape()[1];
  auto out = NewNode({c, h, w});
  const int hw = h * w;
  for (int t = 0; t < hw; ++t) {
    for (int ci = 0; ci < c; ++ci) {
      out->value[static_cast<size_t>(ci) * hw + t] =
          tokens.value()[static_cast<size_t>(t) * c + ci];
    }
  }
  return Tensor([&] {
    auto node = out;
    if (GradEnabled() && tokens.node()->requires_grad) {
      node->requires_grad = true;
      node->parents = {tokens.ptr()};
      node->backprop = [c, hw](Node& on) {
        Node* pt = on.parents[0].get();
        if (!pt->requires_grad) return;
        float* g = pt->GradData();
        for (int t = 0; t < hw; ++t) {
          for (int ci = 0; ci < c; ++ci) {
            g[static_cast<size_t>(t) * c + ci] +=
                on.grad[static_cast<size_t>(ci) * hw + t];
          }
        }
      };
    }
    return node;
  }());
}

}  // namespace atl::nn
