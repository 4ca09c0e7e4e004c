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

#ifndef ATARALAB_CORE_TENSOR_H_
#define ATARALAB_CORE_TENSOR_H_

#include <cstdint>
#include <functional>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace atl::nn {

// Reverse-mode autograd over dense fp32 tensors. Graphs are built dynamically
// per forward pass; Backward() walks the tape in reverse topological order.
struct Node {
  std::vector<int> shape;
  std::vector<float> value;
  std::vector<float> grad;  // sized lazily on first accumulation
  // Scalar reductions also record their double-precision accumulation so
  // finite-difference checks are not limited by the fp32 cast.
  double precise = std::numeric_limits<double>::quiet_NaN();
  bool requires_grad = false;
  bool is_param = false;
  std::string name;  // parameters only
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;

  int64_t NumEl() const {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }
  float* GradData();  // allocates zeroed grad on demand (param sink aware)
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  bool defined() const { return node_ != nullptr; }
  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& ptr() const { return node_; }
  const std::vector<int>& shape() const { return node_->shape; }
  int64_t numel() const { return node_->NumEl(); }
  const std::vector<float>& value() const { return node_->value; }
  std::vector<float>& value() { return node_->value; }
  float item() const { return node_->value.at(0); }
  // Double-precision value for scalar reductions (falls back to fp32).
  double precise_item() const {
    return std::isnan(node_->precise) ? double(node_->value.at(0)) : node_->precise;
  }

 private:
  std::shared_ptr<Node> node_;
};

// While a NoGradGuard is alive on a thread, ops skip tape construction.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
};
bool GradEnabled();

// Redirects parameter-leaf gradient accumulation on the current thread into a
// per-call buffer table instead of the shared Node::grad storage, so that
// several sample graphs can run backward concurrently and be reduced in a
// fixed order afterwards.
class GradSink {
 public:
  GradSink() = default;
  std::vector<float>& BufferFor(Node* param);
  const std::vector<float>* Find(Node* param) const;

 private:
  std::vector<std::pair<Node*, std::vector<float>>> buffers_;
};

class GradSinkScope {
 public:
  explicit GradSinkScope(GradSink* sink);
  ~GradSinkScope();
};

// Leaf constructors.
Tensor Constant(std::vector<int> shape, std::vector<float> value);
Tensor Zeros(std::vector<int> shape);
Tensor Param(std::vector<int> shape, std::vector<float> value, std::string name);

// Runs reverse-mode accumulation from a scalar tensor (grad seeded to 1).
void Backward(const Tensor& loss);
void ZeroGrad(const std::vector<Tensor>& params);

// --- elementwise / dense ops ---
Tensor Add(const Tensor& a, const Tensor& b);
Tensor Sub(const Tensor& a, const Tensor& b);
Tensor Mul(const Tensor& a, const Tensor& b);
Tensor Scale(const Tensor& a, float s);
Tensor AddScalar(const Tensor& a, float s);
Tensor Exp(const Tensor& a);
Tensor Square(const Tensor& a);
Tensor Gelu(const Tensor& a);
Tensor Elu(const Tensor& a);
Tensor Sigmoid(const Tensor& a);
Tensor Tanh(const Tensor& a);
Tensor ClampConst(const Tensor& a, float lo, float hi);
Tensor MinElem(const Tensor& a, const Tensor& b);
Tensor MaxElem(const Tensor& a, const Tensor& b);

// --- matrix ops (2-D, row-major) ---
Tensor MatMul(const Tensor& a, const Tensor& b);
// x: [n, in], w: [out, in], b: [out] -> [n, out]
Tensor Linear(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor SoftmaxRows(const Tensor& x);
Tensor LayerNormRows(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                     float eps = 1e-5f);
Tensor ConcatRows(const std::vector<Tensor>& parts);
Tensor ConcatCols(const std::vector<Tensor>& parts);
Tensor SliceRows(const Tensor& x, int r0, int r1);
Tensor SliceCols(const Tensor& x, int c0, int c1);
Tensor Transpose2D(const Tensor& x);
Tensor Reshape(const Tensor& x, std::vector<int> shape);

// --- reductions ---
Tensor SumAll(const Tensor& x);
Tensor MeanAll(const Tensor& x);
// Row-wise sum: [n, d] -> [n]
Tensor SumRows(const Tensor& x);

// Weighted smooth-L1 between pred and a constant target, summed over
// dimensions:
//   per-dim   0.5 * w * diff^2 / beta        if |diff| < beta
//             w * (|diff| - 0.5 * beta)      otherwise
// The scalar accumulation runs in double precision.
Tensor WeightedSmoothL1(const Tensor& pred, const std::vector<float>& target,
                        const std::vector<float>& weights, float beta);

// Log-density of diagonal-Gaussian actions: mean [n, d], log_std [d],
// actions constant [n, d] -> [n].
Tensor GaussianLogProb(const Tensor& mean, const Tensor& log_std,
                       const std::vector<float>& actions);

}  // namespace atl::nn

#endif  // ATARALAB_CORE_TENSOR_H_
