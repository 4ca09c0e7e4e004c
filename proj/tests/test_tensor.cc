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

#include <cmath>

#include "core/convops.h"
#include "core/net.h"
#include "core/rng.h"
#include "core/tensor.h"
#include "gradcheck.h"
#include "oracles.h"

using namespace atl;
using namespace atl::nn;

namespace {

std::vector<float> RandomVec(Rng* rng, int64_t n, double scale = 1.0) {
  std::vector<float> v(static_cast<size_t>(n));
  for (auto& x : v) x = static_cast<float>(rng->Gauss() * scale);
  return v;
}

double MaxAbsDiff(const std::vector<float>& a, const std::vector<float>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(double(a[i]) - b[i]));
  return m;
}

}  // namespace

TEST_CASE("dilated convolutions match the naive oracle for every rate") {
  Rng rng(11);
  const int c = 5, h = 8, w = 8, o = 4;
  for (int d : {1, 2, 3, 6}) {
    const auto xv = RandomVec(&rng, c * h * w);
    const auto wv = RandomVec(&rng, o * c * 9, 0.3);
    const auto bv = RandomVec(&rng, o, 0.1);
    const Tensor x = Constant({c, h, w}, xv);
    const Tensor wt = Constant({o, c, 3, 3}, wv);
    const Tensor bt = Constant({o}, bv);
    const Tensor y = Conv2d(x, wt, bt, d);
    const auto want = oracle::NaiveConv2d(xv, c, h, w, wv, o, 3, bv, d);
    CHECK(MaxAbsDiff(y.value(), want) <= 1e-5);
  }
}

TEST_CASE("effective receptive field grows linearly with dilation") {
  // A unit impulse at the center spreads exactly to taps at +-d.
  const int h = 13, w = 13;
  std::vector<float> xv(h * w, 0.0f);
  xv[6 * w + 6] = 1.0f;
  std::vector<float> wv(9, 1.0f);
  const Tensor x = Constant({1, h, w}, xv);
  const Tensor wt = Constant({1, 1, 3, 3}, wv);
  const Tensor bt = Constant({1}, {0.0f});
  for (int d : {1, 2, 3, 6}) {
    const Tensor y = Conv2d(x, wt, bt, d);
    int span_min = w, span_max = -1;
    for (int xx = 0; xx < w; ++xx) {
      if (y.value()[6 * w + xx] != 0.0f) {
        span_min = std::min(span_min, xx);
        span_max = std::max(span_max, xx);
      }
    }
    // Field of view along a row: 3 + 2*(d-1) taps -> spatial extent 2d+1.
    CHECK(span_max - span_min + 1 == std::min(w, 2 * d + 1));
  }
}

TEST_CASE("deformable conv with zero offsets and unit mask equals standard conv") {
  Rng rng(21);
  const int c = 6, h = 8, w = 8, o = 5;
  const auto xv = RandomVec(&rng, c * h * w);
  const auto wv = RandomVec(&rng, o * c * 9, 0.3);
  const auto bv = RandomVec(&rng, o, 0.1);
  const Tensor x = Constant({c, h, w}, xv);
  const Tensor wt = Constant({o, c, 3, 3}, wv);
  const Tensor bt = Constant({o}, bv);
  const Tensor off = Zeros({18, h, w});
  const Tensor mask = Constant({9, h, w}, std::vector<float>(9 * h * w, 1.0f));
  const Tensor y = DeformableConv2d(x, wt, bt, off, mask);
  const Tensor y_std = Conv2d(x, wt, bt, 1);
  CHECK(MaxAbsDiff(y.value(), y_std.value()) <= 1e-5);
}

TEST_CASE("deformable conv with integer offsets equals conv of the shifted input") {
  Rng rng(22);
  const int c = 3, h = 8, w = 8, o = 2;
  const auto xv = RandomVec(&rng, c * h * w);
  // Shift sampling by (dy, dx) = (+1, 0) everywhere.
  std::vector<float> shifted(xv.size(), 0.0f);
  for (int ci = 0; ci < c; ++ci) {
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        const int sy = y + 1;
        if (sy < h) {
          shifted[(static_cast<size_t>(ci) * h + y) * w + xx] =
              xv[(static_cast<size_t>(ci) * h + sy) * w + xx];
        }
      }
    }
  }
  const auto wv = RandomVec(&rng, o * c * 9, 0.3);
  const auto bv = RandomVec(&rng, o, 0.1);
  std::vector<float> off(18 * h * w, 0.0f);
  for (int i = 0; i < h * w; ++i) {
    for (int t = 0; t < 9; ++t) off[(2 * t) * h * w + i] = 1.0f;  // dy = +1
  }
  const Tensor got = DeformableConv2d(Constant({c, h, w}, xv), Constant({o, c, 3, 3}, wv),
                                      Constant({o}, bv), Constant({18, h, w}, off),
                                      Constant({9, h, w}, std::vector<float>(9 * h * w, 1.0f)));
  const Tensor want = Conv2d(Constant({c, h, w}, shifted), Constant({o, c, 3, 3}, wv),
                             Constant({o}, bv), 1);
  // Row y = 0 may differ (the shifted input loses the top zero-padding row);
  // every other row agrees up to float tolerance.
  double worst = 0.0;
  for (int oi = 0; oi < o; ++oi) {
    for (int row = 1; row < h; ++row) {
      for (int xx = 0; xx < w; ++xx) {
        const size_t i = (static_cast<size_t>(oi) * h + row) * w + xx;
        worst = std::max(worst, std::abs(double(got.value()[i]) - want.value()[i]));
      }
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("deformable conv with random offsets matches the sampling oracle") {
  Rng rng(23);
  const int c = 4, h = 8, w = 8, o = 3;
  const auto xv = RandomVec(&rng, c * h * w);
  const auto wv = RandomVec(&rng, o * c * 9, 0.3);
  const auto bv = RandomVec(&rng, o, 0.1);
  const auto offv = RandomVec(&rng, 18 * h * w, 0.9);
  std::vector<float> maskv(9 * h * w);
  for (auto& m : maskv) m = static_cast<float>(rng.Uniform());
  const Tensor y = DeformableConv2d(Constant({c, h, w}, xv), Constant({o, c, 3, 3}, wv),
                                    Constant({o}, bv), Constant({18, h, w}, offv),
                                    Constant({9, h, w}, maskv));
  const auto want = oracle::NaiveDeformConv(xv, c, h, w, wv, o, bv, offv, maskv);
  CHECK(MaxAbsDiff(y.value(), want) <= 1e-5);
}

TEST_CASE("deformable conv parameter gradients match finite differences") {
  Rng rng(24);
  const int c = 3, h = 5, w = 5, o = 2;
  const auto xv = RandomVec(&rng, c * h * w);
  Tensor x = Param({c, h, w}, xv, "x");
  Tensor wt = Param({o, c, 3, 3}, RandomVec(&rng, o * c * 9, 0.3), "w");
  Tensor bt = Param({o}, RandomVec(&rng, o, 0.1), "b");
  Tensor off = Param({18, h, w}, RandomVec(&rng, 18 * h * w, 0.4), "off");
  Tensor mask_logit = Param({9, h, w}, RandomVec(&rng, 9 * h * w, 0.5), "mlogit");
  const std::vector<Tensor> params = {x, wt, bt, off, mask_logit};
  auto loss_fn = [&]() {
    Tensor y = DeformableConv2d(x, wt, bt, off, Sigmoid(mask_logit));
    return SumAll(Mul(y, y));
  };
  for (const auto& r : testing::CheckGradients(params, loss_fn)) {
    INFO(r.param);
    CHECK(r.rel_error < 1e-3);
  }
}

TEST_CASE("rotations: identity, group closure, and the warp oracle") {
  Rng rng(31);
  const int c = 3, h = 9, w = 9;
  const auto xv = RandomVec(&rng, c * h * w);
  const Tensor x = Constant({c, h, w}, xv);

  const Tensor r0 = RotateFeatureMap(x, 0.0);
  CHECK(r0.value() == xv);  // bit-identical

  Tensor r = Tensor(x);
  for (int i = 0; i < 4; ++i) r = RotateFeatureMap(r, 90.0);
  CHECK(MaxAbsDiff(r.value(), xv) == 0.0);

  for (double theta : {45.0, 135.0}) {
    const Tensor y = RotateFeatureMap(x, theta);
    const auto want = oracle::NaiveRotate(xv, c, h, w, theta);
    CHECK(MaxAbsDiff(y.value(), want) <= 1e-5);
  }
}

TEST_CASE("angle pooling of a constant map reflects zero-padding coverage") {
  const int c = 2, h = 9, w = 9;
  const float cval = 0.73f;
  const Tensor x = Constant({c, h, w}, std::vector<float>(c * h * w, cval));
  for (double theta : {0.0, 90.0}) {
    const Tensor pooled = GlobalAvgPool(RotateFeatureMap(x, theta));
    CHECK(pooled.value()[0] == doctest::Approx(cval).epsilon(1e-6));
    CHECK(pooled.value()[1] == doctest::Approx(cval).epsilon(1e-6));
  }
  // Coverage fraction from an independent constant-one warp.
  const auto ones = oracle::NaiveRotate(std::vector<float>(h * w, 1.0f), 1, h, w, 45.0);
  double coverage = 0.0;
  for (float v : ones) coverage += v;
  coverage /= (h * w);
  const Tensor pooled45 = GlobalAvgPool(RotateFeatureMap(x, 45.0));
  CHECK(pooled45.value()[0] == doctest::Approx(cval * coverage).epsilon(1e-5));
}

TEST_CASE("branch aggregation is ordered channel concatenation") {
  Rng rng(41);
  const int h = 4, w = 4;
  const Tensor a = Constant({2, h, w}, RandomVec(&rng, 2 * h * w));
  const Tensor b = Constant({3, h, w}, RandomVec(&rng, 3 * h * w));
  const Tensor ab = ConcatChannels({a, b});
  CHECK(ab.shape() == std::vector<int>{5, h, w});
  for (int i = 0; i < 2 * h * w; ++i) CHECK(ab.value()[i] == a.value()[i]);
  for (int i = 0; i < 3 * h * w; ++i) CHECK(ab.value()[2 * h * w + i] == b.value()[i]);
  // Order is part of the contract: permuting inputs changes the output.
  const Tensor ba = ConcatChannels({b, a});
  CHECK_FALSE(ab.value() == ba.value());
  // Four 64-channel branches make the 256-wide head input.
  std::vector<Tensor> branches;
  for (int i = 0; i < 4; ++i) {
    branches.push_back(Constant({64, 2, 2}, RandomVec(&rng, 64 * 4)));
  }
  CHECK(ConcatChannels(branches).shape()[0] == 256);
  // Single input passes through unchanged.
  const Tensor single = ConcatChannels({a});
  CHECK(single.value() == a.value());
}

TEST_CASE("dense ops match finite differences") {
  Rng rng(51);
  Tensor w1 = Param({4, 3}, RandomVec(&rng, 12, 0.5), "w1");
  Tensor b1 = Param({4}, RandomVec(&rng, 4, 0.1), "b1");
  Tensor gamma = Param({4}, ConstInit(4, 1.0f), "gamma");
  Tensor beta = Param({4}, ConstInit(4, 0.0f), "beta");
  Tensor w2 = Param({2, 4}, RandomVec(&rng, 8, 0.5), "w2");
  Tensor b2 = Param({2}, RandomVec(&rng, 2, 0.1), "b2");
  const Tensor x = Constant({5, 3}, RandomVec(&rng, 15));
  const std::vector<Tensor> params = {w1, b1, gamma, beta, w2, b2};
  auto loss_fn = [&]() {
    Tensor h = Linear(x, w1, b1);
    h = LayerNormRows(h, gamma, beta);
    h = Gelu(h);
    h = SoftmaxRows(h);
    h = Linear(h, w2, b2);
    h = Tanh(h);
    return MeanAll(Mul(h, h));
  };
  for (const auto& r : testing::CheckGradients(params, loss_fn)) {
    INFO(r.param);
    CHECK(r.rel_error < 1e-3);
  }
}

TEST_CASE("weighted smooth-l1 reproduces the documented arithmetic") {
  // w = 1, diff = 0.05, beta = 0.1 -> 0.5 * 1 * 0.0025 / 0.1 = 0.0125
  Tensor pred = Constant({1}, {0.05f});
  Tensor l = WeightedSmoothL1(pred, {0.0f}, {1.0f}, 0.1f);
  CHECK(l.item() == doctest::Approx(0.0125).epsilon(1e-7));

  // w = 2 (weighted index), diff = 0.2 -> 2 * (0.2 - 0.05) = 0.3
  pred = Constant({1}, {0.2f});
  l = WeightedSmoothL1(pred, {0.0f}, {2.0f}, 0.1f);
  CHECK(l.item() == doctest::Approx(0.3).epsilon(1e-7));

  // diff = beta exactly -> linear branch: w * (beta - 0.5 beta) = 0.05 w
  for (float wgt : {1.0f, 2.0f, 3.0f}) {
    pred = Constant({1}, {0.1f});
    l = WeightedSmoothL1(pred, {0.0f}, {wgt}, 0.1f);
    CHECK(l.item() == doctest::Approx(0.05 * wgt).epsilon(1e-7));
  }
}

TEST_CASE("weighted smooth-l1 is non-negative, zero iff equal, continuous, monotone") {
  Rng rng(61);
  const std::vector<float> w14 = {1, 1, 1, 1, 2, 1, 1, 1, 1, 1, 1, 2, 1, 1};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<float> target(14), predv(14);
    for (int i = 0; i < 14; ++i) {
      target[i] = static_cast<float>(rng.Uniform(-2, 2));
      predv[i] = static_cast<float>(rng.Uniform(-2, 2));
    }
    const Tensor p = Constant({14}, predv);
    const double loss = WeightedSmoothL1(p, target, w14, 0.1f).precise_item();
    CHECK(loss >= 0.0);
    const Tensor same = Constant({14}, target);
    CHECK(WeightedSmoothL1(same, target, w14, 0.1f).precise_item() == 0.0);
  }
  // Continuity at |diff| = beta and monotonicity in |diff|.
  const float beta = 0.1f;
  double prev = -1.0;
  for (double d = 0.0; d <= 0.3; d += 0.001) {
    const Tensor p = Constant({1}, {static_cast<float>(d)});
    const double v = WeightedSmoothL1(p, {0.0f}, {1.0f}, beta).precise_item();
    CHECK(v >= prev - 1e-9);
    prev = v;
  }
  const Tensor below = Constant({1}, {beta - 1e-6f});
  const Tensor above = Constant({1}, {beta + 1e-6f});
  CHECK(std::abs(WeightedSmoothL1(below, {0.0f}, {1.0f}, beta).precise_item() -
                 WeightedSmoothL1(above, {0.0f}, {1.0f}, beta).precise_item()) < 1e-4);
}

TEST_CASE("encoder grid arithmetic matches the documented widths") {
  EncoderConfig desk;
  CHECK(desk.input_size == 126);
  CHECK(desk.patch_size == 14);
  CHECK(desk.Grid() == 9);

  EncoderConfig paper;
  paper.input_size = 518;
  paper.embed_dim = 768;
  paper.depth = 12;
  paper.heads = 12;
  CHECK(paper.Grid() == 37);
  // Baseline MLP-regressor input width at paper scale: 2 * 37 * 37 = 2738.
  ParamStore store;
  Rng rng(71);
  const MlpRegressorHead head =
      MlpRegressorHead::Create(&store, "probe", 8, paper.Grid(), 256, 14, &rng);
  CHECK(head.fc1.w.shape() == std::vector<int>{256, 2738});
}

TEST_CASE("encoder produces a deterministic grid feature map") {
  ParamStore store;
  Rng rng(81);
  EncoderConfig cfg;
  cfg.input_size = 28;
  cfg.patch_size = 14;
  cfg.embed_dim = 16;
  cfg.depth = 2;
  cfg.heads = 2;
  cfg.register_tokens = 3;
  const VitEncoder enc = VitEncoder::Create(&store, "enc", cfg, &rng);
  const Tensor patches = Constant({4, 3 * 14 * 14}, RandomVec(&rng, 4 * 588));
  NoGradGuard ng;
  const Tensor m1 = enc.EncodeToMap(patches);
  const Tensor m2 = enc.EncodeToMap(patches);
  CHECK(m1.shape() == std::vector<int>{16, 2, 2});
  CHECK(m1.value() == m2.value());
}

TEST_CASE("gaussian log prob matches a hand computation and its gradients") {
  Rng rng(91);
  Tensor mean = Param({2, 3}, RandomVec(&rng, 6, 0.5), "mean");
  Tensor log_std = Param({3}, RandomVec(&rng, 3, 0.2), "log_std");
  const std::vector<float> actions = {0.3f, -0.2f, 0.8f, -0.1f, 0.4f, 0.0f};
  const Tensor lp = GaussianLogProb(mean, log_std, actions);
  // Hand computation for row 0.
  double want = -0.5 * 3 * std::log(2 * M_PI);
  for (int i = 0; i < 3; ++i) {
    const double s = std::exp(double(log_std.value()[i]));
    const double z = (double(actions[i]) - mean.value()[i]) / s;
    want += -0.5 * z * z - double(log_std.value()[i]);
  }
  CHECK(lp.value()[0] == doctest::Approx(want).epsilon(1e-5));

  auto loss_fn = [&]() { return MeanAll(GaussianLogProb(mean, log_std, actions)); };
  for (const auto& r : testing::CheckGradients({mean, log_std}, loss_fn)) {
    INFO(r.param);
    CHECK(r.rel_error < 1e-3);
  }
}

TEST_CASE("dad head is deterministic, 256-wide, and finite-difference clean") {
  ParamStore store;
  Rng rng(101);
  DadConfig cfg;
  cfg.branch_channels = 4;   // tiny model: head input 4 dilations * 4 = 16
  cfg.head_hidden = 8;
  cfg.out_dim = 6;
  const DadHead head = DadHead::Create(&store, "dad", 5, cfg, &rng);
  CHECK(head.fc1.w.shape()[1] ==
        cfg.branch_channels * static_cast<int>(cfg.angles_deg.size()));
  // Move the offset predictor off its identity initialization: bilinear
  // sampling is not differentiable at integer positions, so the check runs at
  // a state whose sample positions sit ~0.3 away from the lattice and whose
  // offset weights are small enough that 1e-3 perturbations cannot cross it.
  Tensor ow = head.offset_w, ob = head.offset_b;
  for (auto& v : ow.value()) v = static_cast<float>(rng.Gauss() * 1e-3);
  for (int t = 0; t < 18; ++t) ob.value()[t] = 0.31f + 0.005f * static_cast<float>(t);
  for (int t = 18; t < 27; ++t) ob.value()[t] = 0.4f;

  const Tensor fmap = Constant({5, 5, 5}, RandomVec(&rng, 125));
  {
    NoGradGuard ng;
    const Tensor o1 = head.Forward(fmap);
    const Tensor o2 = head.Forward(fmap);
    CHECK(o1.shape() == std::vector<int>{6});
    CHECK(o1.value() == o2.value());
  }
  // Targets at controlled offsets from the model output keep every dimension
  // deep inside one smooth-l1 branch, away from the |diff| = beta seam.
  std::vector<float> target;
  {
    NoGradGuard ng;
    const Tensor pred = head.Forward(fmap);
    const float deltas[6] = {0.03f, -0.04f, 0.02f, -0.05f, 0.045f, -0.025f};
    for (int i = 0; i < 6; ++i) target.push_back(pred.value()[i] - deltas[i]);
  }
  const std::vector<float> weights = {1, 1, 1, 1, 2, 1};
  auto loss_fn = [&]() {
    return WeightedSmoothL1(head.Forward(fmap), target, weights, 0.1f);
  };
  for (const auto& r : testing::CheckGradients(store.All(), loss_fn)) {
    INFO(r.param);
    CHECK(r.rel_error < 1e-3);
  }
}

TEST_CASE("default dad config matches the cited dilation and angle sets") {
  DadConfig cfg;
  CHECK(cfg.dilations == std::vector<int>{1, 2, 3, 6});
  CHECK(cfg.angles_deg == std::vector<double>{0.0, 45.0, 90.0, 135.0});
  CHECK(cfg.branch_channels * static_cast<int>(cfg.dilations.size()) == 256);
  CHECK(cfg.branch_channels * static_cast<int>(cfg.angles_deg.size()) == 256);
  CHECK(cfg.head_hidden == 512);
}
