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

#include <vector>

#include "depwsc/encoder.hpp"

namespace depwsc::testing {

/// Straight-line double-precision forward pass written with plain loops
/// over std::vector, sharing no code with the autodiff ops. Additive
/// masking is modelled as excluding masked keys from the softmax sum.
/// Returns the IsNext probability in eval mode.
double reference_nsp_probability(const tok::Encoding& encoding, const num::MaskMatrix* mask,
                                 const enc::ModelParams<float>& params, const enc::EncoderConfig& config,
                                 const enc::MaskPlan& plan);

}  // namespace depwsc::testing
