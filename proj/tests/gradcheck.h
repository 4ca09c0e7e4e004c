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

#ifndef ATARALAB_TESTS_GRADCHECK_H_
#define ATARALAB_TESTS_GRADCHECK_H_

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "core/tensor.h"

namespace atl::testing {

struct GradCheckResult {
  std::string param;
  double rel_error = 0.0;   // ||g_analytic - g_fd|| / max(||g_fd||, tiny)
  double fd_norm = 0.0;
};

// Central finite differences (default perturbation 1e-3, fp32 parameters)
// against the analytic gradient, per parameter group. `loss_fn` must rebuild
// the forward pass from the current parameter values.
inline std::vector<GradCheckResult> CheckGradients(
    const std::vector<nn::Tensor>& params,
    const std::function<nn::Tensor()>& loss_fn, double h = 1e-3) {
  // Analytic pass.
  nn::ZeroGrad(params);
  nn::Tensor loss = loss_fn();
  nn::Backward(loss);
  std::vector<std::vector<float>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) {
    if (p.node()->grad.empty()) p.node()->grad.assign(p.numel(), 0.0f);
    analytic.push_back(p.node()->grad);
  }

  std::vector<GradCheckResult> results;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    const nn::Tensor& p = params[pi];
    double diff_sq = 0.0, fd_sq = 0.0;
    for (int64_t j = 0; j < p.numel(); ++j) {
      const float saved = p.node()->value[j];
      p.node()->value[j] = static_cast<float>(saved + h);
      const double lp = [&] {
        nn::NoGradGuard ng;
        return loss_fn().precise_item();
      }();
      p.node()->value[j] = static_cast<float>(saved - h);
      const double lm = [&] {
        nn::NoGradGuard ng;
        return loss_fn().precise_item();
      }();
      p.node()->value[j] = saved;
      const double fd = (lp - lm) / (2.0 * h);
      const double d = double(analytic[pi][j]) - fd;
      diff_sq += d * d;
      fd_sq += fd * fd;
    }
    GradCheckResult r;
    r.param = p.node()->name;
    r.fd_norm = std::sqrt(fd_sq);
    r.rel_error = std::sqrt(diff_sq) / std::max(r.fd_norm, 1e-8);
    results.push_back(r);
  }
  return results;
}

}  // namespace atl::testing

#endif  // ATARALAB_TESTS_GRADCHECK_H_
