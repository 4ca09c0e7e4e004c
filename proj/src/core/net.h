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

#ifndef ATARALAB_CORE_NET_H_
#define ATARALAB_CORE_NET_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "core/convops.h"
#include "core/rng.h"
#include "core/tensor.h"

namespace atl::nn {

// Named parameter registry. Iteration order (lexicographic by name) defines
// the checkpoint blob layout and optimizer update order.
class ParamStore {
 public:
  Tensor Create(const std::string& name, std::vector<int> shape,
                std::vector<float> value);
  Tensor Get(const std::string& name) const;
  bool Has(const std::string& name) const { return params_.count(name) != 0; }
  std::vector<Tensor> All() const;
  std::vector<std::string> Names() const;
  int64_t TotalCount() const;

  // Flat little-endian float32 blob in name order plus an index table.
  std::vector<float> Flatten() const;
  void LoadFlat(const std::vector<float>& blob);

 private:
  std::map<std::string, Tensor> params_;
};

// Initialization helpers (deterministic given the rng stream).
std::vector<float> NormalInit(Rng* rng, int64_t n, double std_dev);
std::vector<float> ConstInit(int64_t n, float v);

enum class Activation { kGelu, kElu };
Tensor Activate(const Tensor& x, Activation act);

struct LinearModule {
  Tensor w, b;
  static LinearModule Create(ParamStore* store, const std::string& name, int in,
                             int out, Rng* rng);
  Tensor Forward(const Tensor& x) const { return Linear(x, w, b); }
};

struct LayerNormModule {
  Tensor gamma, beta;
  static LayerNormModule Create(ParamStore* store, const std::string& name, int dim);
  Tensor Forward(const Tensor& x) const { return LayerNormRows(x, gamma, beta); }
};

// Multi-layer perceptron with hidden activations (none on the output layer).
struct MlpModule {
  std::vector<LinearModule> layers;
  Activation act = Activation::kGelu;
  static MlpModule Create(ParamStore* store, const std::string& name,
                          const std::vector<int>& dims, Activation act, Rng* rng);
  Tensor Forward(const Tensor& x) const;
};

struct AttentionModule {
  LinearModule wq, wk, wv, wo;
  int heads = 1, dim = 0;
  static AttentionModule Create(ParamStore* store, const std::string& name, int dim,
                                int heads, Rng* rng);
  Tensor Forward(const Tensor& x) const;  // x: [T, D]
};

struct TransformerBlockModule {
  LayerNormModule ln1, ln2;
  AttentionModule attn;
  LinearModule fc1, fc2;
  static TransformerBlockModule Create(ParamStore* store, const std::string& name,
                                       int dim, int heads, int mlp_hidden, Rng* rng);
  Tensor Forward(const Tensor& x) const;
};

// Patch-token transformer encoder with register tokens. Stands in for the
// pretrained DINOv2-Reg backbone at desk scale; EncodeToMap also accepts an
// externally supplied feature map through the model entry points, keeping the
// encoder pluggable.
struct EncoderConfig {
  int input_size = 126;
  int patch_size = 14;
  int embed_dim = 192;
  int depth = 4;
  int heads = 3;
  int register_tokens = 4;
  int mlp_ratio = 4;

  int Grid() const { return input_size / patch_size; }
  void Validate() const;
};

struct VitEncoder {
  EncoderConfig cfg;
  LinearModule patch_embed;
  Tensor pos_embed;   // [grid*grid, D]
  Tensor registers;   // [R, D]
  std::vector<TransformerBlockModule> blocks;
  LayerNormModule final_ln;

  static VitEncoder Create(ParamStore* store, const std::string& name,
                           const EncoderConfig& cfg, Rng* rng);
  // patches: [grid*grid, 3*patch*patch] constant leaf -> [D, grid, grid]
  Tensor EncodeToMap(const Tensor& patches) const;
};

// Direction-aware decoder head: parallel dilated convolutions, modulated
// deformable convolution, rotation-pooled features, MLP projection.
struct DadConfig {
  std::vector<int> dilations = {1, 2, 3, 6};
  std::vector<double> angles_deg = {0.0, 45.0, 90.0, 135.0};
  int branch_channels = 64;
  int head_hidden = 512;
  int out_dim = 6;
  void Validate() const;
};

struct DadHead {
  DadConfig cfg;
  std::vector<Tensor> branch_w, branch_b;  // [64,C,3,3] each
  Tensor offset_w, offset_b;               // [27,256,3,3]
  Tensor deform_w, deform_b;               // [64,256,3,3]
  LinearModule fc1, fc2;

  static DadHead Create(ParamStore* store, const std::string& name, int in_channels,
                        const DadConfig& cfg, Rng* rng);
  Tensor Forward(const Tensor& feature_map) const;  // [C,G,G] -> [out_dim]
};

// 1x1-conv + flatten + MLP regressor head (the paper-style baseline head and
// the gripper head).
struct MlpRegressorHead {
  Tensor conv_w, conv_b;  // [2, C]
  LinearModule fc1, fc2;
  static MlpRegressorHead Create(ParamStore* store, const std::string& name,
                                 int in_channels, int grid, int hidden, int out_dim,
                                 Rng* rng);
  Tensor Forward(const Tensor& feature_map) const;
};

// --- optimizers ---

// AdamW with decoupled weight decay and per-parameter-group learning rates.
class AdamW {
 public:
  struct Group {
    std::vector<Tensor> params;
    double lr = 1e-3;
  };
  AdamW(std::vector<Group> groups, double beta1, double beta2, double eps,
        double weight_decay);

  // lr_scale multiplies every group lr (cosine schedule hook).
  void Step(double lr_scale);
  void ZeroGrad();
  std::vector<Tensor> AllParams() const;
  void SetGroupLr(size_t group, double lr);
  double GroupLr(size_t group) const { return groups_[group].lr; }

 private:
  struct State {
    std::vector<float> m, v;
  };
  std::vector<Group> groups_;
  std::vector<std::vector<State>> state_;
  double beta1_, beta2_, eps_, weight_decay_;
  int64_t t_ = 0;
};

// Global L2 gradient-norm clip. Returns the pre-clip norm.
double ClipGradNorm(const std::vector<Tensor>& params, double max_norm);

// Cosine decay with linear warmup; returns the multiplier in [0, 1].
double CosineWarmupScale(int64_t step, int64_t total_steps, int64_t warmup_steps);

// --- checkpoints ---
// Single-file container: magic, JSON manifest (config hash, iteration, seed,
// name->(offset, shape) index), then the flat little-endian float32 blob.
void SaveCheckpoint(const std::filesystem::path& path, const std::string& kind,
                    const std::string& config_hash, int64_t iteration, uint64_t seed,
                    const ParamStore& store, const std::string& extra_json);

struct CheckpointInfo {
  std::string kind;
  std::string config_hash;
  int64_t iteration = 0;
  uint64_t seed = 0;
  std::string extra_json;
};
CheckpointInfo LoadCheckpoint(const std::filesystem::path& path, ParamStore* store);

}  // namespace atl::nn

#endif  // ATARALAB_CORE_NET_H_
