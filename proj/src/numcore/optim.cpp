// Copyright 2026 The depwsc Authors
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

#include "depwsc/numcore/optim.hpp"

#include <cmath>

namespace depwsc::num {

double linear_warmup_lr(std::size_t step, double base_lr, double warmup_frac,
                        std::size_t total_steps) {
  if (total_steps == 0) throw ContractError("linear_warmup_lr: total_steps must be positive");
  if (warmup_frac < 0.0 || warmup_frac > 1.0) {
    throw ContractError("linear_warmup_lr: warmup fraction must lie in [0, 1]");
  }
  if (step > total_steps) {
    throw ContractError("linear_warmup_lr: step " + std::to_string(step) + " beyond total " +
                        std::to_string(total_steps));
  }
  const double total = static_cast<double>(total_steps);
  const double warmup = warmup_frac * total;
  const double s = static_cast<double>(step);
  if (s < warmup) return base_lr * s / warmup;
  if (warmup >= total) return base_lr;
  return base_lr * (total - s) / (total - warmup);
}

OptimState make_optim_state(const std::vector<NamedParam>& params, AdamWOptions options) {
  OptimState state;
  state.options = options;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.var.dims());
    state.second_moment.emplace_back(p.var.dims());
  }
  return state;
}

double adamw_step(const std::vector<NamedParam>& params, const std::vector<Tensor<float>>& grads,
                  OptimState& state) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size()) {
    throw ShapeError("adamw_step: " + std::to_string(params.size()) + " parameters, " +
                     std::to_string(grads.size()) + " gradients, " +
                     std::to_string(state.first_moment.size()) + " moment slots");
  }
  const auto& opt = state.options;
  const double lr = opt.constant_lr
                        ? opt.base_lr
                        : linear_warmup_lr(std::min(state.step, opt.total_steps), opt.base_lr,
                                           opt.warmup_frac, opt.total_steps);
  const std::size_t t = ++state.step;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Var<float> var = params[k].var;
    auto& w = var.mutable_value();
    const auto& g = grads[k];
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (g.dims() != w.dims() || m.dims() != w.dims()) {
      throw ShapeError("adamw_step: parameter '" + params[k].name + "' has dims " +
                       shape_str(w.dims()) + " but gradient " + shape_str(g.dims()));
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      const double mi = opt.beta1 * m[i] + (1.0 - opt.beta1) * gi;
      const double vi = opt.beta2 * v[i] + (1.0 - opt.beta2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      double wi = w[i];
      wi -= lr * opt.weight_decay * wi;
      wi -= lr * mhat / (std::sqrt(vhat) + opt.eps);
      w[i] = static_cast<float>(wi);
    }
  }
  return lr;
}

}  // namespace depwsc::num
