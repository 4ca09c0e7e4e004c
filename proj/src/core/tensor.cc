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

#include "core/tensor.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "core/util.h"

namespace atl::nn {

namespace {

thread_local int g_no_grad_depth = 0;
thread_local GradSink* g_sink = nullptr;

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

bool SameShape(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape();
}

// Builds the output node and wires parents/backprop when grad is enabled.
Tensor WireUnary(const Tensor& a, std::shared_ptr<Node> out,
                 std::function<void(Node&)> backprop) {
  if (GradEnabled() && a.node()->requires_grad) {
    out->requires_grad = true;
    out->parents = {a.ptr()};
    out->backprop = std::move(backprop);
  }
  return Tensor(std::move(out));
}

Tensor WireBinary(const Tensor& a, const Tensor& b, std::shared_ptr<Node> out,
                  std::function<void(Node&)> backprop) {
  if (GradEnabled() && (a.node()->requires_grad || b.node()->requires_grad)) {
    out->requires_grad = true;
    out->parents = {a.ptr(), b.ptr()};
    out->backprop = std::move(backprop);
  }
  return Tensor(std::move(out));
}

}  // namespace

float* Node::GradData() {
  if (is_param && g_sink != nullptr) {
    auto& buf = g_sink->BufferFor(this);
    return buf.data();
  }
  if (grad.empty()) grad.assign(static_cast<size_t>(NumEl()), 0.0f);
  return grad.data();
}

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }
bool GradEnabled() { return g_no_grad_depth == 0; }

std::vector<float>& GradSink::BufferFor(Node* param) {
  for (auto& [node, buf] : buffers_) {
    if (node == param) return buf;
  }
  buffers_.emplace_back(param, std::vector<float>(param->NumEl(), 0.0f));
  return buffers_.back().second;
}

const std::vector<float>* GradSink::Find(Node* param) const {
  for (const auto& [node, buf] : buffers_) {
    if (node == param) return &buf;
  }
  return nullptr;
}

GradSinkScope::GradSinkScope(GradSink* sink) { g_sink = sink; }
GradSinkScope::~GradSinkScope() { g_sink = nullptr; }

Tensor Constant(std::vector<int> shape, std::vector<float> value) {
  auto n = NewNode(std::move(shape));
  if (static_cast<int64_t>(value.size()) != n->NumEl()) {
    throw ContractViolation("Constant: value size does not match shape");
  }
  n->value = std::move(value);
  return Tensor(std::move(n));
}

Tensor Zeros(std::vector<int> shape) {
  return Tensor(NewNode(std::move(shape)));
}

Tensor Param(std::vector<int> shape, std::vector<float> value, std::string name) {
  auto n = NewNode(std::move(shape));
  if (static_cast<int64_t>(value.size()) != n->NumEl()) {
    throw ContractViolation("Param: value size does not match shape");
  }
  n->value = std::move(value);
  n->requires_grad = true;
  n->is_param = true;
  n->name = std::move(name);
  return Tensor(std::move(n));
}

void Backward(const Tensor& loss) {
  if (loss.numel() != 1) throw ContractViolation("Backward: loss must be scalar");
  // Iterative topological order (graphs can be deep).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx == 0 && !visited.insert(node).second) {
      stack.pop_back();
      continue;
    }
    if (idx < node->parents.size()) {
      Node* next = node->parents[idx++].get();
      if (next->requires_grad && !visited.count(next)) stack.emplace_back(next, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss.node()->GradData()[0] += 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop && n->requires_grad) {
      if (!n->is_param && n->grad.empty()) {
        n->grad.assign(static_cast<size_t>(n->NumEl()), 0.0f);
      }
      n->backprop(*n);
    }
  }
}

void ZeroGrad(const std::vector<Tensor>& params) {
  for (const Tensor& p : params) {
    p.node()->grad.assign(static_cast<size_t>(p.numel()), 0.0f);
  }
}

// ---------------- elementwise ----------------

Tensor Add(const Tensor& a, const Tensor& b) {
  if (!SameShape(a, b)) throw ContractViolation("Add: shape mismatch");
  auto out = NewNode(a.shape());
  const size_t n = out->value.size();
  for (size_t i = 0; i < n; ++i) out->value[i] = a.value()[i] + b.value()[i];
  return WireBinary(a, b, std::move(out), [](Node& o) {
    Node* pa = o.parents[0].get();
    Node* pb = o.parents[1].get();
    if (pa->requires_grad) {
      float* g = pa->GradData();
      for (size_t i = 0; i < o.value.size(); ++i) g[i] += o.grad[i];
    }
    if (pb->requires_grad) {
      float* g = pb->GradData();
      for (size_t i = 0; i < o.value.size(); ++i) g[i] += o.grad[i];
    }
  });
}

Tensor Sub(const Tensor& a, const Tensor& b) {
  if (!SameShape(a, b)) throw ContractViolation("Sub: shape mismatch");
  auto out = NewNode(a.shape());
  for (size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = a.value()[i] - b.value()[i];
  return WireBinary(a, b, std::move(out), [](Node& o) {
    Node* pa = o.parents[0].get();
    Node* pb = o.parents[1].get();
    if (pa->requires_grad) {
      float* g = pa->GradData();
      for (size_t i = 0; i < o.value.size(); ++i) g[i] += o.grad[i];
    }
    if (pb->requires_grad) {
      float* g = pb->GradData();
      for (size_t i = 0; i < o.value.size(); ++i) g[i] -= o.grad[i];
    }
  });
}

Tensor Mul(const Tensor& a, const Tensor& b) {
  if (!SameShape(a, b)) throw ContractViolation("Mul: shape mismatch");
  auto out = NewNode(a.shape());
  for (size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = a.value()[i] * b.value()[i];
  return WireBinary(a, b, std::move(out), [](Node& o) {
    Node* pa = o.parents[0].get();
    Node* pb = o.parents[1].get();
    if (pa->requires_grad) {
      float* g = pa->GradData();
      for (size_t i = 0; i < o.value.size(); ++i) g[i] += o.grad[i] * pb->value[i];
    }
    if (pb->requires_grad) {
      float* g = pb->GradData();
      for (size_t i = 0; i < o.value.size(); ++i) g[i] += o.grad[i] * pa->value[i];
    }
  });
}

Tensor Scale(const Tensor& a, float s) {
  auto out = NewNode(a.shape());
  for (size_t i = 0; i < out->value.size(); ++i) out->value[i] = a.value()[i] * s;
  return WireUnary(a, std::move(out), [s](Node& o) {
    Node* pa = o.parents[0].get();
    if (!pa->requires_grad) return;
    float* g = pa->GradData();
    for (size_t i = 0; i < o.value.size(); ++i) g[i] += o.grad[i] * s;
  });
}

Tensor AddScalar(const Tensor& a, float s) {
  auto out = NewNode(a.shape());
  for (size_t i = 0; i < out->value.size(); ++i) out->value[i] = a.value()[i] + s;
  return WireUnary(a, std::move(out), [](Node& o) {
    Node* pa = o.parents[0].get();
    if (!pa->requires_grad) return;
    float* g = pa->GradData();
    for (size_t i = 0; i < o.value.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor Exp(const Tensor& a) {
  auto out = NewNode(a.shape());
  for (size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = std::exp(a.value()[i]);
  return WireUnary(a, std::move(out), [](Node& o) {
    Node* pa = o.parents[0].get();
    if (!pa->requires_grad) return;
    float* g = pa->GradData();
    for (size_t i = 0; i < o.value.size(); ++i) g[i] += o.grad[i] * o.value[i];
  });
}

Tensor Square(const Tensor& a) {
  auto out = NewNode(a.shape());
  for (size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = a.value()[i] * a.value()[i];
  return WireUnary(a, std::move(out), [](Node& o) {
    Node* pa = o.parents[0].get();
    if (!pa->requires_grad) return;
    float* g = pa->GradData();
    for (size_t i = 0; i < o.value.size(); ++i)
      g[i] += o.grad[i] * 2.0f * pa->value[i];
  });
}

Tensor Gelu(const Tensor& a) {
  auto out = NewNode(a.shape());
  for (size_t i = 0; i < out->value.size(); ++i) {
    const float x = a.value()[i];
    out->value[i] = 0.5f * x * (1.0f + std::erf(x * 0.7071067811865475f));
  }
  return WireUnary(a, std::move(out), [](Node& o) {
    Node* pa = o.parents[0].get();
    if (!pa->requires_grad) return;
    float* g = pa->GradData();
    for (size_t i = 0; i < o.value.size(); ++i) {
      const float x = pa->value[i];
      const float cdf = 0.5f * (1.0f + std::erf(x * 0.7071067811865475f));
      const float pdf = 0.3989422804014327f * std::exp(-0.5f * x * x);
      g[i] += o.grad[i] * (cdf + x * pdf);
    }
  });
}

Tensor Elu(const Tensor& a) {
  auto out = NewNode(a.shape());
  for (size_t i = 0; i < out->value.size(); ++i) {
    const float x = a.value()[i];
    out->value[i] = x > 0.0f ? x : std::expm1(x);
  }
  return WireUnary(a, std::move(out), [](Node& o) {
    Node* pa = o.parents[0].get();
    if (!pa->requires_grad) return;
    float* g = pa->GradData();
    for (size_t i = 0; i < o.value.size(); ++i) {
      const float x = pa->value[i];
      g[i] += o.grad[i] * (x > 0.0f ? 1.0f : std::exp(x));
    }
  });
}

Tensor Sigmoid(const Tensor& a) {
  auto out = NewNode(a.shape());
  for (size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = 1.0f / (1.0f + std::exp(-a.value()[i]));
  return WireUnary(a, std::move(out), [](Node& o) {
    Node* pa = o.parents[0].get();
    if (!pa->requires_grad) return;
    float* g = pa->GradData();
    for (size_t i = 0; i < o.value.size(); ++i)
      g[i] += o.grad[i] * o.value[i] * (1.0f - o.value[i]);
  });
}

Tensor Tanh(const Tensor& a) {
  auto out = NewNode(a.shape());
  for (size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = std::tanh(a.value()[i]);
  return WireUnary(a, std::move(out), [](Node& o) {
    Node* pa = o.parents[0].get();
    if (!pa->requires_grad) return;
    float* g = pa->GradData();
    for (size_t i = 0; i < o.value.size(); ++i)
      g[i] += o.grad[i] * (1.0f - o.value[i] * o.value[i]);
  });
}

Tensor ClampConst(const Tensor& a, float lo, float hi) {
  auto out = NewNode(a.shape());
  for (size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = std::clamp(a.value()[i], lo, hi);
  return WireUnary(a, std::move(out), [lo, hi](Node& o) {
    Node* pa = o.parents[0].get();
    if (!pa->requires_grad) return;
    float* g = pa->GradData();
    for (size_t i = 0; i < o.value.size(); ++i) {
      const float x = pa->value[i];
      if (x > lo && x < hi) g[i] += o.grad[i];
    }
  });
}

Tensor MinElem(const Tensor& a, const Tensor& b) {
  if (!SameShape(a, b)) throw ContractViolation("MinElem: shape mismatch");
  auto out = NewNode(a.shape());
  for (size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = std::min(a.value()[i], b.value()[i]);
  return WireBinary(a, b, std::move(out), [](Node& o) {
    Node* pa = o.parents[0].get();
    Node* pb = o.parents[1].get();
    float* ga = pa->requires_grad ? pa->GradData() : nullptr;
    float* gb = pb->requires_grad ? pb->GradData() : nullptr;
    for (size_t i = 0; i < o.value.size(); ++i) {
      if (pa->value[i] <= pb->value[i]) {
        if (ga) ga[i] += o.grad[i];
      } else if (gb) {
        gb[i] += o.grad[i];
      }
    }
  });
}

Tensor MaxElem(const Tensor& a, const Tensor& b) {
  if (!SameShape(a, b)) throw ContractViolation("MaxElem: shape mismatch");
  auto out = NewNode(a.shape());
  for (size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = std::max(a.value()[i], b.value()[i]);
  return WireBinary(a, b, std::move(out), [](Node& o) {
    Node* pa = o.parents[0].get();
    Node* pb = o.parents[1].get();
    float* ga = pa->requires_grad ? pa->GradData() : nullptr;
    float* gb = pb->requires_grad ? pb->GradData() : nullptr;
    for (size_t i = 0; i < o.value.size(); ++i) {
      if (pa->value[i] >= pb->value[i]) {
        if (ga) ga[i] += o.grad[i];
      } else if (gb) {
        gb[i] += o.grad[i];
      }
    }
  });
}

// ---------------- matrix ops ----------------

Tensor MatMul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0]) {
    throw ContractViolation("MatMul: invalid shapes");
  }
  const int m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  auto out = NewNode({m, n});
  ConstMatMap ma(a.value().data(), m, k);
  ConstMatMap mb(b.value().data(), k, n);
  MatMap mo(out->value.data(), m, n);
  mo.noalias() = ma * mb;
  return WireBinary(a, b, std::move(out), [m, k, n](Node& o) {
    Node* pa = o.parents[0].get();
    Node* pb = o.parents[1].get();
    ConstMatMap go(o.grad.data(), m, n);
    if (pa->requires_grad) {
      ConstMatMap mb2(pb->value.data(), k, n);
      MatMap ga(pa->GradData(), m, k);
      ga.noalias() += go * mb2.transpose();
    }
    if (pb->requires_grad) {
      ConstMatMap ma2(pa->value.data(), m, k);
      MatMap gb(pb->GradData(), k, n);
      gb.noalias() += ma2.transpose() * go;
    }
  });
}

Tensor Linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.shape().size() != 2 || w.shape().size() != 2 || b.shape().size() != 1 ||
      x.shape()[1] != w.shape()[1] || w.shape()[0] != b.shape()[0]) {
    throw ContractViolation("Linear: invalid shapes");
  }
  const int n = x.shape()[0], in = x.shape()[1], out_dim = w.shape()[0];
  auto out = NewNode({n, out_dim});
  ConstMatMap mx(x.value().data(), n, in);
  ConstMatMap mw(w.value().data(), out_dim, in);
  MatMap mo(out->value.data(), n, out_dim);
  mo.noalias() = mx * mw.transpose();
  mo.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(b.value().data(), out_dim);

  auto node = out;
  if (GradEnabled() && (x.node()->requires_grad || w.node()->requires_grad ||
                        b.node()->requires_grad)) {
    node->requires_grad = true;
    node->parents = {x.ptr(), w.ptr(), b.ptr()};
    node->backprop = [n, in, out_dim](Node& o) {
      Node* px = o.parents[0].get();
      Node* pw = o.parents[1].get();
      Node* pb = o.parents[2].get();
      ConstMatMap go(o.grad.data(), n, out_dim);
      if (px->requires_grad) {
        ConstMatMap mw2(pw->value.data(), out_dim, in);
        MatMap gx(px->GradData(), n, in);
        gx.noalias() += go * mw2;
      }
      if (pw->requires_grad) {
        ConstMatMap mx2(px->value.data(), n, in);
        MatMap gw(pw->GradData(), out_dim, in);
        gw.noalias() += go.transpose() * mx2;
      }
      if (pb->requires_grad) {
        Eigen::Map<Eigen::RowVectorXf> gb(pb->GradData(), out_dim);
        gb += go.colwise().sum();
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor SoftmaxRows(const Tensor& x) {
  if (x.shape().size() != 2) throw ContractViolation("SoftmaxRows: need 2-D");
  const int n = x.shape()[0], d = x.shape()[1];
  auto out = NewNode({n, d});
  for (int r = 0; r < n; ++r) {
    const float* in = &x.value()[static_cast<size_t>(r) * d];
    float* o = &out->value[static_cast<size_t>(r) * d];
    float mx = in[0];
    for (int i = 1; i < d; ++i) mx = std::max(mx, in[i]);
    double sum = 0.0;
    for (int i = 0; i < d; ++i) {
      o[i] = std::exp(in[i] - mx);
      sum += o[i];
    }
    const float inv = static_cast<float>(1.0 / sum);
    for (int i = 0; i < d; ++i) o[i] *= inv;
  }
  return WireUnary(x, std::move(out), [n, d](Node& o) {
    Node* px = o.parents[0].get();
    if (!px->requires_grad) return;
    float* g = px->GradData();
    for (int r = 0; r < n; ++r) {
      const float* y = &o.value[static_cast<size_t>(r) * d];
      const float* go = &o.grad[static_cast<size_t>(r) * d];
      double dot = 0.0;
      for (int i = 0; i < d; ++i) dot += double(go[i]) * y[i];
      for (int i = 0; i < d; ++i)
        g[static_cast<size_t>(r) * d + i] += y[i] * (go[i] - static_cast<float>(dot));
    }
  });
}

Tensor LayerNormRows(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                     float eps) {
  if (x.shape().size() != 2) throw ContractViolation("LayerNormRows: need 2-D");
  const int n = x.shape()[0], d = x.shape()[1];
  if (gamma.numel() != d || beta.numel() != d) {
    throw ContractViolation("LayerNormRows: affine size mismatch");
  }
  auto out = NewNode({n, d});
  // Cache per-row mean and inverse std for backward.
  auto stats = std::make_shared<std::vector<float>>(2 * n);
  for (int r = 0; r < n; ++r) {
    const float* in = &x.value()[static_cast<size_t>(r) * d];
    double mean = 0.0;
    for (int i = 0; i < d; ++i) mean += in[i];
    mean /= d;
    double var = 0.0;
    for (int i = 0; i < d; ++i) var += (in[i] - mean) * (in[i] - mean);
    var /= d;
    const float inv_std = static_cast<float>(1.0 / std::sqrt(var + eps));
    (*stats)[2 * r] = static_cast<float>(mean);
    (*stats)[2 * r + 1] = inv_std;
    float* o = &out->value[static_cast<size_t>(r) * d];
    for (int i = 0; i < d; ++i) {
      o[i] = (in[i] - static_cast<float>(mean)) * inv_std * gamma.value()[i] +
             beta.value()[i];
    }
  }
  auto node = out;
  if (GradEnabled() && (x.node()->requires_grad || gamma.node()->requires_grad ||
                        beta.node()->requires_grad)) {
    node->requires_grad = true;
    node->parents = {x.ptr(), gamma.ptr(), beta.ptr()};
    node->backprop = [n, d, stats](Node& o) {
      Node* px = o.parents[0].get();
      Node* pg = o.parents[1].get();
      Node* pbt = o.parents[2].get();
      float* gg = pg->requires_grad ? pg->GradData() : nullptr;
      float* gb = pbt->requires_grad ? pbt->GradData() : nullptr;
      float* gx = px->requires_grad ? px->GradData() : nullptr;
      for (int r = 0; r < n; ++r) {
        const float mean = (*stats)[2 * r];
        const float inv_std = (*stats)[2 * r + 1];
        const float* in = &px->value[static_cast<size_t>(r) * d];
        const float* go = &o.grad[static_cast<size_t>(r) * d];
        if (gg || gb) {
          for (int i = 0; i < d; ++i) {
            const float xhat = (in[i] - mean) * inv_std;
            if (gg) gg[i] += go[i] * xhat;
            if (gb) gb[i] += go[i];
          }
        }
        if (gx) {
          // dL/dx = inv_std * (dy*gamma - mean(dy*gamma) - xhat*mean(dy*gamma*xhat))
          double m1 = 0.0, m2 = 0.0;
          for (int i = 0; i < d; ++i) {
            const float dyg = go[i] * pg->value[i];
            const float xhat = (in[i] - mean) * inv_std;
            m1 += dyg;
            m2 += double(dyg) * xhat;
          }
          m1 /= d;
          m2 /= d;
          for (int i = 0; i < d; ++i) {
            const float dyg = go[i] * pg->value[i];
            const float xhat = (in[i] - mean) * inv_std;
            gx[static_cast<size_t>(r) * d + i] +=
                inv_std * (dyg - static_cast<float>(m1) - xhat * static_cast<float>(m2));
          }
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor ConcatRows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractViolation("ConcatRows: empty input");
  const int d = parts[0].shape()[1];
  int rows = 0;
  bool needs_grad = false;
  for (const Tensor& p : parts) {
    if (p.shape().size() != 2 || p.shape()[1] != d) {
      throw ContractViolation("ConcatRows: column mismatch");
    }
    rows += p.shape()[0];
    needs_grad = needs_grad || p.node()->requires_grad;
  }
  auto out = NewNode({rows, d});
  size_t at = 0;
  for (const Tensor& p : parts) {
    std::copy(p.value().begin(), p.value().end(), out->value.begin() + at);
    at += p.value().size();
  }
  if (GradEnabled() && needs_grad) {
    out->requires_grad = true;
    for (const Tensor& p : parts) out->parents.push_back(p.ptr());
    out->backprop = [](Node& o) {
      size_t at = 0;
      for (auto& parent : o.parents) {
        const size_t sz = parent->value.size();
        if (parent->requires_grad) {
          float* g = parent->GradData();
          for (size_t i = 0; i < sz; ++i) g[i] += o.grad[at + i];
        }
        at += sz;
      }
    };
  }
  return Tensor(std::move(out));
}

Tensor ConcatCols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractViolation("ConcatCols: empty input");
  const int n = parts[0].shape()[0];
  int cols = 0;
  bool needs_grad = false;
  for (const Tensor& p : parts) {
    if (p.shape().size() != 2 || p.shape()[0] != n) {
      throw ContractViolation("ConcatCols: row mismatch");
    }
    cols += p.shape()[1];
    needs_grad = needs_grad || p.node()->requires_grad;
  }
  auto out = NewNode({n, cols});
  int at = 0;
  for (const Tensor& p : parts) {
    const int d = p.shape()[1];
    for (int r = 0; r < n; ++r) {
      std::copy(p.value().begin() + static_cast<size_t>(r) * d,
                p.value().begin() + static_cast<size_t>(r + 1) * d,
                out->value.begin() + static_cast<size_t>(r) * cols + at);
    }
    at += d;
  }
  if (GradEnabled() && needs_grad) {
    out->requires_grad = true;
    for (const Tensor& p : parts) out->parents.push_back(p.ptr());
    out->backprop = [n, cols](Node& o) {
      int at = 0;
      for (auto& parent : o.parents) {
        const int d = parent->shape[1];
        if (parent->requires_grad) {
          float* g = parent->GradData();
          for (int r = 0; r < n; ++r) {
            for (int i = 0; i < d; ++i) {
              g[static_cast<size_t>(r) * d + i] +=
                  o.grad[static_cast<size_t>(r) * cols + at + i];
            }
          }
        }
        at += d;
      }
    };
  }
  return Tensor(std::move(out));
}

Tensor SliceRows(const Tensor& x, int r0, int r1) {
  if (x.shape().size() != 2 || r0 < 0 || r1 > x.shape()[0] || r0 >= r1) {
    throw ContractViolation("SliceRows: invalid range");
  }
  const int d = x.shape()[1];
  auto out = NewNode({r1 - r0, d});
  std::copy(x.value().begin() + static_cast<size_t>(r0) * d,
            x.value().begin() + static_cast<size_t>(r1) * d, out->value.begin());
  return WireUnary(x, std::move(out), [r0, d](Node& o) {
    Node* px = o.parents[0].get();
    if (!px->requires_grad) return;
    float* g = px->GradData();
    for (size_t i = 0; i < o.value.size(); ++i)
      g[static_cast<size_t>(r0) * d + i] += o.grad[i];
  });
}

Tensor SliceCols(const Tensor& x, int c0, int c1) {
  if (x.shape().size() != 2 || c0 < 0 || c1 > x.shape()[1] || c0 >= c1) {
    throw ContractViolation("SliceCols: invalid range");
  }
  const int n = x.shape()[0], d = x.shape()[1], w = c1 - c0;
  auto out = NewNode({n, w});
  for (int r = 0; r < n; ++r) {
    std::copy(x.value().begin() + static_cast<size_t>(r) * d + c0,
              x.value().begin() + static_cast<size_t>(r) * d + c1,
              out->value.begin() + static_cast<size_t>(r) * w);
  }
  return WireUnary(x, std::move(out), [n, d, c0, w](Node& o) {
    Node* px = o.parents[0].get();
    if (!px->requires_grad) return;
    float* g = px->GradData();
    for (int r = 0; r < n; ++r) {
      for (int i = 0; i < w; ++i) {
        g[static_cast<size_t>(r) * d + c0 + i] +=
            o.grad[static_cast<size_t>(r) * w + i];
      }
    }
  });
}

Tensor Transpose2D(const Tensor& x) {
  if (x.shape().size() != 2) throw ContractViolation("Transpose2D: need 2-D");
  const int n = x.shape()[0], d = x.shape()[1];
  auto out = NewNode({d, n});
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c)
      out->value[static_cast<size_t>(c) * n + r] = x.value()[static_cast<size_t>(r) * d + c];
  return WireUnary(x, std::move(out), [n, d](Node& o) {
    Node* px = o.parents[0].get();
    if (!px->requires_grad) return;
    float* g = px->GradData();
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < d; ++c)
        g[static_cast<size_t>(r) * d + c] += o.grad[static_cast<size_t>(c) * n + r];
  });
}

Tensor Reshape(const Tensor& x, std::vector<int> shape) {
  auto out = NewNode(std::move(shape));
  if (out->NumEl() != x.numel()) throw ContractViolation("Reshape: size mismatch");
  out->value = x.value();
  return WireUnary(x, std::move(out), [](Node& o) {
    Node* px = o.parents[0].get();
    if (!px->requires_grad) return;
    float* g = px->GradData();
    for (size_t i = 0; i < o.value.size(); ++i) g[i] += o.grad[i];
  });
}

// ---------------- reductions ----------------

Tensor SumAll(const Tensor& x) {
  auto out = NewNode({1});
  double acc = 0.0;
  for (float v : x.value()) acc += v;
  out->value[0] = static_cast<float>(acc);
  out->precise = acc;
  return WireUnary(x, std::move(out), [](Node& o) {
    Node* px = o.parents[0].get();
    if (!px->requires_grad) return;
    float* g = px->GradData();
    const float go = o.grad[0];
    for (size_t i = 0; i < px->value.size(); ++i) g[i] += go;
  });
}

Tensor MeanAll(const Tensor& x) {
  auto out = NewNode({1});
  double acc = 0.0;
  for (float v : x.value()) acc += v;
  const float inv = 1.0f / static_cast<float>(x.numel());
  out->value[0] = static_cast<float>(acc) * inv;
  out->precise = acc / static_cast<double>(x.numel());
  return WireUnary(x, std::move(out), [inv](Node& o) {
    Node* px = o.parents[0].get();
    if (!px->requires_grad) return;
    float* g = px->GradData();
    const float go = o.grad[0] * inv;
    for (size_t i = 0; i < px->value.size(); ++i) g[i] += go;
  });
}

Tensor SumRows(const Tensor& x) {
  if (x.shape().size() != 2) throw ContractViolation("SumRows: need 2-D");
  const int n = x.shape()[0], d = x.shape()[1];
  auto out = NewNode({n});
  for (int r = 0; r < n; ++r) {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) acc += x.value()[static_cast<size_t>(r) * d + i];
    out->value[r] = static_cast<float>(acc);
  }
  return WireUnary(x, std::move(out), [n, d](Node& o) {
    Node* px = o.parents[0].get();
    if (!px->requires_grad) return;
    float* g = px->GradData();
    for (int r = 0; r < n; ++r) {
      const float go = o.grad[r];
      for (int i = 0; i < d; ++i) g[static_cast<size_t>(r) * d + i] += go;
    }
  });
}

Tensor WeightedSmoothL1(const Tensor& pred, const std::vector<float>& target,
                        const std::vector<float>& weights, float beta) {
  if (static_cast<int64_t>(target.size()) != pred.numel() ||
      weights.size() != target.size()) {
    throw ContractViolation("WeightedSmoothL1: size mismatch");
  }
  if (!(beta > 0.0f)) throw ContractViolation("WeightedSmoothL1: beta must be > 0");
  auto out = NewNode({1});
  double acc = 0.0;
  for (size_t i = 0; i < target.size(); ++i) {
    const double diff = double(pred.value()[i]) - double(target[i]);
    const double ad = std::abs(diff);
    if (ad < beta) {
      acc += 0.5 * weights[i] * diff * diff / beta;
    } else {
      acc += weights[i] * (ad - 0.5 * beta);
    }
  }
  out->value[0] = static_cast<float>(acc);
  out->precise = acc;
  auto tgt = std::make_shared<std::vector<float>>(target);
  auto wts = std::make_shared<std::vector<float>>(weights);
  return WireUnary(pred, std::move(out), [tgt, wts, beta](Node& o) {
    Node* px = o.parents[0].get();
    if (!px->requires_grad) return;
    float* g = px->GradData();
    const float go = o.grad[0];
    for (size_t i = 0; i < tgt->size(); ++i) {
      const float diff = px->value[i] - (*tgt)[i];
      float d;
      if (std::abs(diff) < beta) {
        d = (*wts)[i] * diff / beta;
      } else {
        d = (*wts)[i] * (diff > 0.0f ? 1.0f : -1.0f);
      }
      g[i] += go * d;
    }
  });
}

Tensor GaussianLogProb(const Tensor& mean, const Tensor& log_std,
                       const std::vector<float>& actions) {
  if (mean.shape().size() != 2) throw ContractViolation("GaussianLogProb: need 2-D mean");
  const int n = mean.shape()[0], d = mean.shape()[1];
  if (log_std.numel() != d || static_cast<int64_t>(actions.size()) != mean.numel()) {
    throw ContractViolation("GaussianLogProb: size mismatch");
  }
  constexpr double kLog2Pi = 1.8378770664093454835606594728112;
  auto out = NewNode({n});
  for (int r = 0; r < n; ++r) {
    double acc = -0.5 * d * kLog2Pi;
    for (int i = 0; i < d; ++i) {
      const double ls = log_std.value()[i];
      const double z = (double(actions[static_cast<size_t>(r) * d + i]) -
                        double(mean.value()[static_cast<size_t>(r) * d + i])) /
                       std::exp(ls);
      acc += -0.5 * z * z - ls;
    }
    out->value[r] = static_cast<float>(acc);
  }
  auto acts = std::make_shared<std::vector<float>>(actions);
  auto node = out;
  if (GradEnabled() && (mean.node()->requires_grad || log_std.node()->requires_grad)) {
    node->requires_grad = true;
    node->parents = {mean.ptr(), log_std.ptr()};
    node->backprop = [n, d, acts](Node& o) {
      Node* pm = o.parents[0].get();
      Node* ps = o.parents[1].get();
      float* gm = pm->requires_grad ? pm->GradData() : nullptr;
      float* gs = ps->requires_grad ? ps->GradData() : nullptr;
      for (int r = 0; r < n; ++r) {
        const float go = o.grad[r];
        for (int i = 0; i < d; ++i) {
          const float ls = ps->value[i];
          const float inv_var = std::exp(-2.0f * ls);
          const float diff = (*acts)[static_cast<size_t>(r) * d + i] -
                             pm->value[static_cast<size_t>(r) * d + i];
          if (gm) gm[static_cast<size_t>(r) * d + i] += go * diff * inv_var;
          if (gs) gs[i] += go * (diff * diff * inv_var - 1.0f);
        }
      }
    };
  }
  return Tensor(std::move(node));
}

}  // namespace atl::nn
