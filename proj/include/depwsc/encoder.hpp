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
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "depwsc/numcore/ops.hpp"
#include "depwsc/tokenizer.hpp"

namespace depwsc::enc {

using num::MaskMatrix;
using num::MaskMode;
using num::Shape;
using num::Tensor;
using num::Var;

enum class ScaleMode { sqrt_dk, dk };

ScaleMode parse_scale_mode(const std::string& s);
std::string to_string(ScaleMode mode);

struct EncoderConfig {
  std::size_t num_layers = 2;
  std::size_t num_heads = 2;
  std::size_t hidden_size = 32;
  std::size_t ff_size = 64;
  std::size_t vocab_size = 0;
  std::size_t max_positions = 64;
  std::size_t segment_types = 2;
  double dropout_rate = 0.1;
  double layer_norm_eps = 1e-12;
  ScaleMode scale_mode = ScaleMode::sqrt_dk;
  MaskMode mask_mode = MaskMode::additive;

  std::size_t head_size() const { return hidden_size / num_heads; }
  void validate() const;

  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
  bool operator==(const EncoderConfig&) const = default;
};

enum class PlanKind { none, inside, outside };
enum class LayerPosition { first, middle, last };

PlanKind parse_plan_kind(const std::string& s);
std::string to_string(PlanKind kind);
LayerPosition parse_layer_position(const std::string& s);
std::string to_string(LayerPosition pos);

/// Layer indices for masking the first / middle / last `t` of `num_layers`
/// layers. Middle picks the t consecutive layers whose centre is closest to
/// the centre of the stack (lower block on ties); 24 layers with t = 5 is
/// pinned to 10-14.
std::vector<std::size_t> resolve_inside_indices(LayerPosition position, std::size_t t,
                                                std::size_t num_layers);

/// Where the dependency mask enters the encoder.
struct MaskPlan {
  PlanKind kind = PlanKind::none;
  std::vector<std::size_t> layers;  // inside: sorted, unique
  std::size_t depth = 0;            // outside: recurrent applications of the shared layer

  static MaskPlan none() { return {}; }
  static MaskPlan inside(std::vector<std::size_t> layers);
  static MaskPlan inside(LayerPosition position, std::size_t t, std::size_t num_layers);
  static MaskPlan outside(std::size_t depth);

  void validate(std::size_t num_layers) const;
  bool uses_mask() const noexcept { return kind != PlanKind::none; }
  bool masks_layer(std::size_t i) const;
  std::string describe() const;

  nlohmann::json to_json() const;
  static MaskPlan from_json(const nlohmann::json& j);
  bool operator==(const MaskPlan&) const = default;
};

template <typename T>
struct LayerParams {
  Var<T> query_w, query_b, key_w, key_b, value_w, value_b, output_w, output_b;
  Var<T> attn_ln_gain, attn_ln_bias;
  Var<T> ffn_in_w, ffn_in_b, ffn_out_w, ffn_out_b;
  Var<T> ffn_ln_gain, ffn_ln_bias;
};

template <typename T>
struct ModelParams {
  Var<T> token_emb, position_emb, segment_emb, emb_ln_gain, emb_ln_bias;
  std::vector<LayerParams<T>> layers;
  std::optional<LayerParams<T>> outer;  // present iff the plan is outside
  Var<T> pooler_w, pooler_b, nsp_w, nsp_b;

  /// Every learnable tensor under a stable name, in a fixed order.
  std::vector<std::pair<std::string, Var<T>>> named() const;

  template <typename U>
  ModelParams<U> cast() const;
};

using NamedShapes = std::vector<std::pair<std::string, Shape>>;

/// Names and dims of every parameter for a config; a pure function of the
/// config and whether an outer layer exists.
NamedShapes param_shapes(const EncoderConfig& config, PlanKind kind);
std::size_t parameter_count(const EncoderConfig& config, PlanKind kind);

/// Truncated-normal(0.02) weights, zero biases, unit layer-norm gains.
ModelParams<float> init_params(const EncoderConfig& config, PlanKind kind, std::uint64_t seed);
/// Same tensor set with every value zero except layer-norm gains.
ModelParams<float> zero_params(const EncoderConfig& config, PlanKind kind);

/// Rebuilds parameters from named tensors, checking the set of names and
/// each tensor's dims against the config. Errors name the offending tensor.
ModelParams<float> params_from_tensors(const EncoderConfig& config, PlanKind kind,
                                       std::vector<std::pair<std::string, Tensor<float>>> tensors);

struct ForwardOptions {
  bool train = false;
  num::Rng* rng = nullptr;  // dropout draws; required when train is set and dropout > 0
};

/// Per-head attention outputs softmax(QKᵀ/scale [masked])·V, before concatenation.
template <typename T>
std::vector<Var<T>> attention_heads(const Var<T>& hidden, const LayerParams<T>& layer,
                                    const MaskMatrix* mask, const EncoderConfig& config);

/// Multi-head self-attention + output projection + residual + layer norm,
/// then the GELU feed-forward sublayer with residual + layer norm.
template <typename T>
Var<T> attention_layer(const Var<T>& hidden, const LayerParams<T>& layer, const MaskMatrix* mask,
                       const EncoderConfig& config, const ForwardOptions& options = {});

template <typename T>
struct EncoderOutput {
  Var<T> hidden;  // n×d
  Var<T> pooled;  // 1×d, tanh-affine of the final [CLS] state
};

/// Full forward pass. `mask` must be the token-level mask for `encoding`
/// and is required whenever the plan uses one.
template <typename T>
EncoderOutput<T> encoder_forward(const tok::Encoding& encoding, const MaskMatrix* mask,
                                 const ModelParams<T>& params, const EncoderConfig& config,
                                 const MaskPlan& plan, const ForwardOptions& options = {});

/// Class order follows the usual NSP convention: 0 = IsNext, 1 = NotNext.
inline constexpr std::size_t kIsNextClass = 0;
inline constexpr std::size_t kNotNextClass = 1;

template <typename T>
Var<T> nsp_logits(const Var<T>& pooled, const ModelParams<T>& params);

/// Probability of IsNext.
template <typename T>
T nsp_probability(const Var<T>& pooled, const ModelParams<T>& params);

}  // namespace depwsc::enc
