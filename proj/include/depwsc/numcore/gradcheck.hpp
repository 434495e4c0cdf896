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
#include <functional>
#include <vector>

#include "depwsc/numcore/autodiff.hpp"

namespace depwsc::num {

struct GradcheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor for the relative error, so coordinates whose true
  // gradient is ~0 are judged on absolute error.
  double floor = 1e-6;
};

struct GradcheckResult {
  bool passed = false;
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Compares backward() against central differences on every coordinate of
/// every input. fn must rebuild its graph from the inputs on each call and
/// return a scalar. Relative error is |a-n| / max(|a|, |n|, floor).
GradcheckResult gradcheck(const std::function<Var<double>()>& fn,
                          const std::vector<Var<double>>& inputs, GradcheckOptions options = {});

}  // namespace depwsc::num
