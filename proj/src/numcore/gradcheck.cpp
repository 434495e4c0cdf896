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

#include "depwsc/numcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace depwsc::num {

GradcheckResult gradcheck(const std::function<Var<double>()>& fn,
                          const std::vector<Var<double>>& inputs, GradcheckOptions options) {
  GradcheckResult result;
  std::vector<Tensor<double>> analytic;
  {
    const Var<double> loss = fn();
    analytic = gradients(loss, inputs);
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Var<double> input = inputs[k];
    auto& values = input.mutable_value();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + options.step;
      const double plus = fn().value()[0];
      values[i] = saved - options.step;
      const double minus = fn().value()[0];
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic[k][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.coordinates;
      if (result.coordinates == 1 || rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_input = k;
        result.worst_index = i;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  result.passed = result.max_rel_error < options.tolerance;
  return result;
}

}  // namespace depwsc::num
