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

#include "core/net.h"

#include <cmath>
#include <cstring>
#include <nlohmann/json.hpp>

#include "core/util.h"

namespace atl::nn {

using nlohmann::json;

Tensor ParamStore::Create(const std::string& name, std::vector<int> shape,
                          std::vector<float> value) {
  if (params_.count(name)) throw ContractViolation("ParamStore: duplicate name " + name);
  Tensor t = Param(std::move(shape), std::move(value), name);
  params_.emplace(name, t);
  return t;
}

Tensor ParamStore::Get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractViolation("ParamStore: missing param " + name);
  return it->second;
}

std::vector<Tensor> ParamStore::All() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(t);
  return out;
}

std::vector<std::string> ParamStore::Names() const {
  std::vector<std::string> out;
  for (const auto& [name, t] : params_) out.push_back(name);
  return out;
}

int64_t ParamStore::TotalCount() const {
  int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

std::vector<float> ParamStore::Flatten() const {
  std::vector<float> blob;
  blob.reserve(static_cast<size_t>(TotalCount()));
  for (const auto& [name, t] : params_) {
    blob.insert(blob.end(), t.value().begin(), t.value().end());
  }
  return blob;
}

void ParamStore::LoadFlat(const std::vector<float>& blob) {
  if (static_cast<int64_t>(blob.size()) != TotalCount()) {
    throw IoError("checkpoint blob size does not match model parameter count");
  }
  size_t at = 0;
  for (auto& [name, t] : params_) {
    std::copy(blob.begin() + at, blob.begin() + at + t.numel(), t.value().begin());
    at += t.numel();
  }
}

std::vector<float> NormalInit(Rng* rng, int64_t n, double std_dev) {
  std::vector<float> v(static_cast<size_t>(n));
  for (auto& x : v) x = static_cast<float>(rng->Gauss() * std_dev);
  return v;
}

std::vector<float> ConstInit(int64_t n, float value) {
  return std::vector<float>(static_cast<size_t>(n), value);
}

Tensor Activate(const Tensor& x, Activation act) {
  return act == Activation::kGelu ? Gelu(x) : Elu(x);
}

LinearModule LinearModule::Create(ParamStore* store, const std::string& name, int in,
                                  int out, Rng* rng) {
  const double std_dev = std::sqrt(2.0 / (in + out));
  LinearModule m;
  m.w = store->Create(name + ".weight", {out, in},
                      NormalInit(rng, static_cast<int64_t>(out) * in, std_dev));
  m.b = store->Create(name + ".bias", {out}, ConstInit(out, 0.0f));
  return m;
}

LayerNormModule LayerNormModule::Create(ParamStore* store, const std::string& name,
                                        int dim) {
  LayerNormModule m;
  m.gamma = store->Create(name + ".gamma", {dim}, ConstInit(dim, 1.0f));
  m.beta = store->Create(name + ".beta", {dim}, ConstInit(dim, 0.0f));
  return m;
}

MlpModule MlpModule::Create(ParamStore* store, const std::string& name,
                            const std::vector<int>& dims, Activation act, Rng* rng) {
  MlpModule m;
  m.act = act;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    m.layers.push_back(LinearModule::Create(store, name + ".fc" + std::to_string(i),
                                            dims[i], dims[i + 1], rng));
  }
  return m;
}

Tensor MlpModule::Forward(const Tensor& x) const {
  Tensor h = x;
  for (size_t i = 0; i < layers.size(); ++i) {
    h = layers[i].Forward(h);
    if (i + 1 < layers.size()) h = Activate(h, act);
  }
  return h;
}

AttentionModule AttentionModule::Create(ParamStore* store, const std::string& name,
                                        int dim, int heads, Rng* rng) {
  if (dim % heads != 0) throw ContractViolation("Attention: dim % heads != 0");
  AttentionModule m;
  m.heads = heads;
  m.dim = dim;
  m.wq = LinearModule::Create(store, name + ".wq", dim, dim, rng);
  m.wk = LinearModule::Create(store, name + ".wk", dim, dim, rng);
  m.wv = LinearModule::Create(store, name + ".wv", dim, dim, rng);
  m.wo = LinearModule::Create(store, name + ".wo", dim, dim, rng);
  return m;
}

Tensor AttentionModule::Forward(const Tensor& x) const {
  const int dh = dim / heads;
  const Tensor q = wq.Forward(x), k = wk.Forward(x), v = wv.Forward(x);
  std::vector<Tensor> head_outs;
  head_outs.reserve(heads);
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
  for (int h = 0; h < heads; ++h) {
    const Tensor qh = SliceCols(q, h * dh, (h + 1) * dh);
    const Tensor kh = SliceCols(k, h * dh, (h + 1) * dh);
    const Tensor vh = SliceCols(v, h * dh, (h + 1) * dh);
    const Tensor scores = Scale(MatMul(qh, Transpose2D(kh)), scale);
    const Tensor attn = SoftmaxRows(scores);
    head_outs.push_back(MatMul(attn, vh));
  }
  return wo.Forward(ConcatCols(head_outs));
}

TransformerBlockModule TransformerBlockModule::Create(ParamStore* store,
                                                      const std::string& name, int dim,
                                                      int heads, int mlp_hidden,
                                                      Rng* rng) {
  TransformerBlockModule m;
  m.ln1 = LayerNormModule::Create(store, name + ".ln1", dim);
  m.ln2 = LayerNormModule::Create(store, name + ".ln2", dim);
  m.attn = AttentionModule::Create(store, name + ".attn", dim, heads, rng);
  m.fc1 = LinearModule::Create(store, name + ".fc1", dim, mlp_hidden, rng);
  m.fc2 = LinearModule::Create(store, name + ".fc2", mlp_hidden, dim, rng);
  return m;
}

Tensor TransformerBlockModule::Forward(const Tensor& x) const {
  Tensor h = Add(x, attn.Forward(ln1.Forward(x)));
  Tensor mlp = fc2.Forward(Gelu(fc1.Forward(ln2.Forward(h))));
  return Add(h, mlp);
}

void EncoderConfig::Validate() const {
  if (input_size % patch_size != 0) {
    throw ConfigError("encoder: input_size must be divisible by patch_size");
  }
  if (embed_dim % heads != 0) throw ConfigError("encoder: embed_dim % heads != 0");
  if (depth < 1 || register_tokens < 0) throw ConfigError("encoder: bad depth/registers");
}

VitEncoder VitEncoder::Create(ParamStore* store, const std::string& name,
                              const EncoderConfig& cfg, Rng* rng) {
  cfg.Validate();
  VitEncoder enc;
  enc.cfg = cfg;
  const int g = cfg.Grid();
  const int patch_dim = 3 * cfg.patch_size * cfg.patch_size;
  enc.patch_embed = LinearModule::Create(store, name + ".patch_embed", patch_dim,
                                         cfg.embed_dim, rng);
  enc.pos_embed = store->Create(
      name + ".pos_embed", {g * g, cfg.embed_dim},
      NormalInit(rng, static_cast<int64_t>(g) * g * cfg.embed_dim, 0.02));
  enc.registers = store->Create(
      name + ".registers", {cfg.register_tokens, cfg.embed_dim},
      NormalInit(rng, static_cast<int64_t>(cfg.register_tokens) * cfg.embed_dim, 0.02));
  for (int i = 0; i < cfg.depth; ++i) {
    enc.blocks.push_back(TransformerBlockModule::Create(
        store, name + ".block" + std::to_string(i), cfg.embed_dim, cfg.heads,
        cfg.mlp_ratio * cfg.embed_dim, rng));
  }
  enc.final_ln = LayerNormModule::Create(store, name + ".final_ln", cfg.embed_dim);
  return enc;
}

Tensor VitEncoder::EncodeToMap(const Tensor& patches) const {
  const int g = cfg.Grid();
  if (patches.shape() !=
      std::vector<int>{g * g, 3 * cfg.patch_size * cfg.patch_size}) {
    throw ContractViolation("encoder: patch matrix shape mismatch");
  }
  Tensor tokens = Add(patch_embed.Forward(patches), pos_embed);
  Tensor x = cfg.register_tokens > 0
                 ? ConcatRows({Tensor(registers), tokens})
                 : tokens;
  for (const auto& block : blocks) x = block.Forward(x);
  x = final_ln.Forward(x);
  // Register tokens absorb artifacts; only patch tokens form the grid.
  Tensor grid_tokens =
      cfg.register_tokens > 0 ? SliceRows(x, cfg.register_tokens, cfg.register_tokens + g * g)
                              : x;
  return TokensToMap(grid_tokens, g, g);
}

void DadConfig::Validate() const {
  if (dilations.empty() || angles_deg.empty()) {
    throw ConfigError("dad: dilation/angle sets must be non-empty");
  }
  for (int d : dilations) {
    if (d < 1) throw ConfigError("dad: dilation must be >= 1");
  }
}

DadHead DadHead::Create(ParamStore* store, const std::string& name, int in_channels,
                        const DadConfig& cfg, Rng* rng) {
  cfg.Validate();
  DadHead head;
  head.cfg = cfg;
  const int bc = cfg.branch_channels;
  const int agg = bc * static_cast<int>(cfg.dilations.size());
  for (size_t i = 0; i < cfg.dilations.size(); ++i) {
    const double std_dev = std::sqrt(2.0 / (9.0 * in_channels));
    head.branch_w.push_back(store->Create(
        name + ".branch" + std::to_string(i) + ".weight", {bc, in_channels, 3, 3},
        NormalInit(rng, static_cast<int64_t>(bc) * in_channels * 9, std_dev)));
    head.branch_b.push_back(store->Create(name + ".branch" + std::to_string(i) + ".bias",
                                          {bc}, ConstInit(bc, 0.0f)));
  }
  // Offset predictor starts as the identity deformation: zero weights, zero
  // offset bias, modulation bias driven to m ~= 1.
  head.offset_w = store->Create(name + ".offset.weight", {27, agg, 3, 3},
                                ConstInit(static_cast<int64_t>(27) * agg * 9, 0.0f));
  std::vector<float> off_bias(27, 0.0f);
  for (int t = 18; t < 27; ++t) off_bias[t] = 8.0f;
  head.offset_b = store->Create(name + ".offset.bias", {27}, std::move(off_bias));
  {
    const double std_dev = std::sqrt(2.0 / (9.0 * agg));
    head.deform_w = store->Create(name + ".deform.weight", {bc, agg, 3, 3},
                                  NormalInit(rng, static_cast<int64_t>(bc) * agg * 9,
                                             std_dev));
    head.deform_b = store->Create(name + ".deform.bias", {bc}, ConstInit(bc, 0.0f));
  }
  const int pooled = bc * static_cast<int>(cfg.angles_deg.size());
  head.fc1 = LinearModule::Create(store, name + ".fc1", pooled, cfg.head_hidden, rng);
  head.fc2 = LinearModule::Create(store, name + ".fc2", cfg.head_hidden, cfg.out_dim, rng);
  return head;
}

Tensor DadHead::Forward(const Tensor& feature_map) const {
  // (1) multi-scale dilated branches, concatenated in ascending-d order.
  std::vector<Tensor> branches;
  branches.reserve(cfg.dilations.size());
  for (size_t i = 0; i < cfg.dilations.size(); ++i) {
    branches.push_back(
        Gelu(Conv2d(feature_map, branch_w[i], branch_b[i], cfg.dilations[i])));
  }
  Tensor f = branches.size() == 1 ? branches[0] : ConcatChannels(branches);

  // (2) modulated deformable convolution with predicted offsets.
  const int h = f.shape()[1], w = f.shape()[2];
  Tensor raw = Conv2d(f, offset_w, offset_b, 1);  // [27,H,W]
  Tensor raw2d = Reshape(raw, {27, h * w});
  Tensor offsets = Reshape(SliceRows(raw2d, 0, 18), {18, h, w});
  Tensor mask = Sigmoid(Reshape(SliceRows(raw2d, 18, 27), {9, h, w}));
  Tensor deformed = DeformableConv2d(f, deform_w, deform_b, offsets, mask);

  // (3) angle-sensitive pooling over the rotation set, ascending order.
  std::vector<Tensor> pooled;
  pooled.reserve(cfg.angles_deg.size());
  for (double theta : cfg.angles_deg) {
    pooled.push_back(
        Reshape(GlobalAvgPool(RotateFeatureMap(deformed, theta)), {1, cfg.branch_channels}));
  }
  Tensor p = pooled.size() == 1 ? pooled[0] : ConcatCols(pooled);
  Tensor out = fc2.Forward(Gelu(fc1.Forward(p)));
  return Reshape(out, {cfg.out_dim});
}

MlpRegressorHead MlpRegressorHead::Create(ParamStore* store, const std::string& name,
                                          int in_channels, int grid, int hidden,
                                          int out_dim, Rng* rng) {
  MlpRegressorHead head;
  const double std_dev = std::sqrt(2.0 / in_channels);
  head.conv_w = store->Create(name + ".conv.weight", {2, in_channels},
                              NormalInit(rng, 2LL * in_channels, std_dev));
  head.conv_b = store->Create(name + ".conv.bias", {2}, ConstInit(2, 0.0f));
  head.fc1 = LinearModule::Create(store, name + ".fc1", 2 * grid * grid, hidden, rng);
  head.fc2 = LinearModule::Create(store, name + ".fc2", hidden, out_dim, rng);
  return head;
}

Tensor MlpRegressorHead::Forward(const Tensor& feature_map) const {
  const int h = feature_map.shape()[1], w = feature_map.shape()[2];
  Tensor x = Conv1x1(feature_map, conv_w, conv_b);        // [2,H,W]
  Tensor flat = Reshape(x, {1, 2 * h * w});
  Tensor out = fc2.Forward(Gelu(fc1.Forward(flat)));
  return Reshape(out, {out.shape()[1]});
}

AdamW::AdamW(std::vector<Group> groups, double beta1, double beta2, double eps,
             double weight_decay)
    : groups_(std::move(groups)),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      weight_decay_(weight_decay) {
  state_.resize(groups_.size());
  for (size_t g = 0; g < groups_.size(); ++g) {
    state_[g].resize(groups_[g].params.size());
    for (size_t i = 0; i < groups_[g].params.size(); ++i) {
      const auto n = static_cast<size_t>(groups_[g].params[i].numel());
      state_[g][i].m.assign(n, 0.0f);
      state_[g][i].v.assign(n, 0.0f);
    }
  }
}

void AdamW::Step(double lr_scale) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t g = 0; g < groups_.size(); ++g) {
    const double lr = groups_[g].lr * lr_scale;
    for (size_t i = 0; i < groups_[g].params.size(); ++i) {
      Tensor& p = groups_[g].params[i];
      Node* node = p.node();
      if (node->grad.empty()) node->grad.assign(p.numel(), 0.0f);
      auto& st = state_[g][i];
      float* w = node->value.data();
      const float* grad = node->grad.data();
      for (size_t j = 0; j < node->value.size(); ++j) {
        st.m[j] = static_cast<float>(beta1_ * st.m[j] + (1.0 - beta1_) * grad[j]);
        st.v[j] = static_cast<float>(beta2_ * st.v[j] +
                                     (1.0 - beta2_) * double(grad[j]) * grad[j]);
        const double mhat = st.m[j] / bc1;
        const double vhat = st.v[j] / bc2;
        double upd = mhat / (std::sqrt(vhat) + eps_);
        upd += weight_decay_ * w[j];  // decoupled decay
        w[j] = static_cast<float>(w[j] - lr * upd);
      }
    }
  }
}

void AdamW::ZeroGrad() {
  for (auto& g : groups_) {
    for (auto& p : g.params) {
      p.node()->grad.assign(static_cast<size_t>(p.numel()), 0.0f);
    }
  }
}

std::vector<Tensor> AdamW::AllParams() const {
  std::vector<Tensor> out;
  for (const auto& g : groups_) {
    out.insert(out.end(), g.params.begin(), g.params.end());
  }
  return out;
}

void AdamW::SetGroupLr(size_t group, double lr) { groups_.at(group).lr = lr; }

double ClipGradNorm(const std::vector<Tensor>& params, double max_norm) {
  double sq = 0.0;
  for (const Tensor& p : params) {
    for (float g : p.node()->grad) sq += double(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const float scale = static_cast<float>(max_norm / norm);
    for (const Tensor& p : params) {
      for (float& g : p.node()->grad) g *= scale;
    }
  }
  return norm;
}

double CosineWarmupScale(int64_t step, int64_t total_steps, int64_t warmup_steps) {
  if (total_steps <= 0) return 1.0;
  if (warmup_steps > 0 && step < warmup_steps) {
    return static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  }
  const double denom = std::max<int64_t>(1, total_steps - warmup_steps);
  const double progress = std::min(1.0, static_cast<double>(step - warmup_steps) / denom);
  return 0.5 * (1.0 + std::cos(M_PI * progress));
}

void SaveCheckpoint(const std::filesystem::path& path, const std::string& kind,
                    const std::string& config_hash, int64_t iteration, uint64_t seed,
                    const ParamStore& store, const std::string& extra_json) {
  json index = json::array();
  int64_t offset = 0;
  for (const auto& name : store.Names()) {
    const Tensor t = store.Get(name);
    index.push_back({{"name", name}, {"offset", offset}, {"shape", t.shape()}});
    offset += t.numel();
  }
  json manifest = {{"format_version", 1},
                   {"kind", kind},
                   {"config_hash", config_hash},
                   {"iteration", iteration},
                   {"seed", seed},
                   {"params", index},
                   {"extra", extra_json.empty() ? json::object() : json::parse(extra_json)}};
  const std::string mtext = manifest.dump();
  std::string bytes = "ATLCKPT1";
  const uint64_t mlen = mtext.size();
  bytes.append(reinterpret_cast<const char*>(&mlen), 8);
  bytes += mtext;
  const std::vector<float> blob = store.Flatten();
  bytes.append(reinterpret_cast<const char*>(blob.data()), 4 * blob.size());
  WriteFileBytes(path, bytes);
}

CheckpointInfo LoadCheckpoint(const std::filesystem::path& path, ParamStore* store) {
  const std::string bytes = ReadFileBytes(path);
  if (bytes.size() < 16 || bytes.compare(0, 8, "ATLCKPT1") != 0) {
    throw IoError("not a checkpoint file: " + path.string());
  }
  uint64_t mlen = 0;
  std::memcpy(&mlen, bytes.data() + 8, 8);
  if (16 + mlen > bytes.size()) throw IoError("truncated checkpoint manifest");
  json manifest = json::parse(bytes.substr(16, mlen));
  CheckpointInfo info;
  info.kind = manifest.at("kind").get<std::string>();
  info.config_hash = manifest.at("config_hash").get<std::string>();
  info.iteration = manifest.at("iteration").get<int64_t>();
  info.seed = manifest.at("seed").get<uint64_t>();
  info.extra_json = manifest.at("extra").dump();
  const size_t blob_off = 16 + mlen;
  const size_t blob_len = (bytes.size() - blob_off) / 4;
  std::vector<float> blob(blob_len);
  std::memcpy(blob.data(), bytes.data() + blob_off, 4 * blob_len);
  store->LoadFlat(blob);
  return info;
}

}  // namespace atl::nn
