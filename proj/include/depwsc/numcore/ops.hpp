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
#include <vector>

#include "depwsc/numcore/autodiff.hpp"
#include "depwsc/numcore/mask_matrix.hpp"
#include "depwsc/numcore/rng.hpp"

// Differentiable operations. Instantiated for float (training, inference)
// and double (gradient checks).
namespace depwsc::num {

template <typename T> Var<T> matmul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> transpose(const Var<T>& a);

template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> scale(const Var<T>& a, T factor);
/// x[n×d] + b[d], b broadcast over rows.
template <typename T> Var<T> add_bias(const Var<T>& x, const Var<T>& b);
/// x·w + b for x[n×k], w[k×m], b[m].
template <typename T> Var<T> affine(const Var<T>& x, const Var<T>& w, const Var<T>& b);

template <typename T> Var<T> sum(const Var<T>& a);
template <typename T> Var<T> mean(const Var<T>& a);

template <typename T> Var<T> tanh(const Var<T>& a);
/// Exact (erf) GELU.
template <typename T> Var<T> gelu(const Var<T>& a);

/// Row-wise softmax with max shift. Entries equal to -inf are treated as
/// masked; a row made only of them is an error ("fully masked row").
template <typename T> Var<T> softmax_rows(const Var<T>& logits);

/// Softmax after applying a 0/1 mask. Additive: masked logits get
/// kMaskedLogitOffset added. Multiplicative: logits times mask. The mask
/// is a constant; no gradient flows into it.
template <typename T>
Var<T> masked_softmax(const Var<T>& logits, const MaskMatrix& mask, MaskMode mode);

/// Per-row normalisation to zero mean / unit (population) variance, then
/// gain·x̂ + bias.
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias, T eps);

/// Inverted dropout: kept entries are scaled by 1/(1-rate).
template <typename T> Var<T> dropout(const Var<T>& x, double rate, Rng& rng);

/// Columns [start, start+count) of a matrix.
template <typename T> Var<T> slice_cols(const Var<T>& x, std::size_t start, std::size_t count);
template <typename T> Var<T> concat_cols(const std::vector<Var<T>>& parts);
/// Row i of a matrix as a 1×d matrix.
template <typename T> Var<T> row(const Var<T>& x, std::size_t i);
/// Gathers rows of table[V×d] by index into an n×d matrix.
template <typename T> Var<T> embedding(const Var<T>& table, const std::vector<std::size_t>& ids);

/// Mean cross-entropy of a 1×C logit row against a target class.
template <typename T> Var<T> cross_entropy(const Var<T>& logits, std::size_t target);

/// Non-differentiable helper: row softmax of a plain tensor.
template <typename T> Tensor<T> softmax_rows(const Tensor<T>& logits);

}  // namespace depwsc::num
