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

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "depwsc/numcore/autodiff.hpp"

namespace depwsc::num {

/// Linear ramp 0 -> base_lr over the first warmup_frac·total_steps steps,
/// then linear decay to 0 at total_steps.
double linear_warmup_lr(std::size_t step, double base_lr, double warmup_frac,
                        std::size_t total_steps);

struct AdamWOptions {
  double base_lr = 5e-4;
  double warmup_frac = 0.1;
  std::size_t total_steps = 1;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // When set, the schedule is bypassed and this rate is used as-is.
  bool constant_lr = false;
};

struct NamedParam {
  std::string name;
  Var<float> var;
};

/// Moments, step counter and schedule for a fixed parameter list.
struct OptimState {
  AdamWOptions options;
  std::vector<Tensor<float>> first_moment;
  std::vector<Tensor<float>> second_moment;
  std::size_t step = 0;
};

OptimState make_optim_state(const std::vector<NamedParam>& params, AdamWOptions options);

/// One AdamW update with decoupled weight decay and bias-corrected moments.
/// The learning rate comes from linear_warmup_lr at the current step (before
/// increment) unless options.constant_lr is set. Returns the rate used.
double adamw_step(const std::vector<NamedParam>& params, const std::vector<Tensor<float>>& grads,
                  OptimState& state);

}  // namespace depwsc::num
