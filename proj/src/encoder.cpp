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

#include "depwsc/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "depwsc/error.hpp"

namespace depwsc::enc {

using nlohmann::json;

ScaleMode parse_scale_mode(const std::string& s) {
  if (s == "sqrt_dk") return ScaleMode::sqrt_dk;
  if (s == "dk") return ScaleMode::dk;
  throw ContractError("unknown scale mode '" + s + "' (expected sqrt_dk|dk)");
}

std::string to_string(ScaleMode mode) { return mode == ScaleMode::sqrt_dk ? "sqrt_dk" : "dk"; }

void EncoderConfig::validate() const {
  const auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ContractError(std::string("encoder config: ") + name + " must be positive");
  };
  positive(num_layers, "num_layers");
  positive(num_heads, "num_heads");
  positive(hidden_size, "hidden_size");
  positive(ff_size, "ff_size");
  positive(vocab_size, "vocab_size");
  positive(max_positions, "max_positions");
  positive(segment_types, "segment_types");
  if (hidden_size % num_heads != 0) {
    throw ContractError("encoder config: hidden_size " + std::to_string(hidden_size) +
                        " is not divisible by num_heads " + std::to_string(num_heads));
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ContractError("encoder config: dropout must lie in [0, 1)");
  }
  if (!(layer_norm_eps > 0.0)) throw ContractError("encoder config: layer_norm_eps must be positive");
}

json EncoderConfig::to_json() const {
  return json{{"num_layers", num_layers},
              {"num_heads", num_heads},
              {"hidden_size", hidden_size},
              {"ff_size", ff_size},
              {"vocab_size", vocab_size},
              {"max_positions", max_positions},
              {"segment_types", segment_types},
              {"dropout", dropout_rate},
              {"layer_norm_eps", layer_norm_eps},
              {"scale_mode", to_string(scale_mode)},
              {"mask_mode", num::to_string(mask_mode)}};
}

EncoderConfig EncoderConfig::from_json(const json& j) {
  EncoderConfig c;
  c.num_layers = j.value("num_layers", c.num_layers);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.hidden_size = j.value("hidden_size", c.hidden_size);
  c.ff_size = j.value("ff_size", c.ff_size);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.max_positions = j.value("max_positions", c.max_positions);
  c.segment_types = j.value("segment_types", c.segment_types);
  c.dropout_rate = j.value("dropout", c.dropout_rate);
  c.layer_norm_eps = j.value("layer_norm_eps", c.layer_norm_eps);
  c.scale_mode = parse_scale_mode(j.value("scale_mode", to_string(c.scale_mode)));
  c.mask_mode = num::parse_mask_mode(j.value("mask_mode", num::to_string(c.mask_mode)));
  return c;
}

PlanKind parse_plan_kind(const std::string& s) {
  if (s == "none") return PlanKind::none;
  if (s == "inside") return PlanKind::inside;
  if (s == "outside") return PlanKind::outside;
  throw ContractError("unknown plan kind '" + s + "' (expected none|inside|outside)");
}

std::string to_string(PlanKind kind) {
  switch (kind) {
    case PlanKind::none: return "none";
    case PlanKind::inside: return "inside";
    case PlanKind::outside: return "outside";
  }
  return "none";
}

LayerPosition parse_layer_position(const std::string& s) {
  if (s == "first") return LayerPosition::first;
  if (s == "middle") return LayerPosition::middle;
  if (s == "last") return LayerPosition::last;
  throw ContractError("unknown layer position '" + s + "' (expected first|middle|last)");
}

std::string to_string(LayerPosition pos) {
  switch (pos) {
    case LayerPosition::first: return "first";
    case LayerPosition::middle: return "middle";
    case LayerPosition::last: return "last";
  }
  return "first";
}

std::vector<std::size_t> resolve_inside_indices(LayerPosition position, std::size_t t,
                                                std::size_t num_layers) {
  if (t < 1 || t > num_layers) {
    throw ContractError("resolve_inside_indices: t = " + std::to_string(t) +
                        " must lie in [1, " + std::to_string(num_layers) + "]");
  }
  std::size_t start = 0;
  switch (position) {
    case LayerPosition::first: start = 0; break;
    case LayerPosition::last: start = num_layers - t; break;
    case LayerPosition::middle: {
      // Pinned: 24 layers, t = 5 uses 10-14, one above the centred 9-13.
      if (num_layers == 24 && t == 5) {
        start = 10;
        break;
      }
      const double target = (static_cast<double>(num_layers) - 1.0) / 2.0;
      double best = 1e300;
      for (std::size_t s = 0; s + t <= num_layers; ++s) {
        const double centre = static_cast<double>(s) + (static_cast<double>(t) - 1.0) / 2.0;
        const double dist = std::abs(centre - target);
        if (dist < best - 1e-12) {
          best = dist;
          start = s;
        }
      }
      break;
    }
  }
  std::vector<std::size_t> out(t);
  for (std::size_t i = 0; i < t; ++i) out[i] = start + i;
  return out;
}

MaskPlan MaskPlan::inside(std::vector<std::size_t> layers) {
  std::sort(layers.begin(), layers.end());
  layers.erase(std::unique(layers.begin(), layers.end()), layers.end());
  MaskPlan p;
  p.kind = PlanKind::inside;
  p.layers = std::move(layers);
  return p;
}

MaskPlan MaskPlan::inside(LayerPosition position, std::size_t t, std::size_t num_layers) {
  return inside(resolve_inside_indices(position, t, num_layers));
}

MaskPlan MaskPlan::outside(std::size_t depth) {
  MaskPlan p;
  p.kind = PlanKind::outside;
  p.depth = depth;
  return p;
}

void MaskPlan::validate(std::size_t num_layers) const {
  if (kind == PlanKind::inside) {
    for (std::size_t i : layers) {
      if (i >= num_layers) {
        throw ContractError("mask plan: layer index " + std::to_string(i) + " outside [0, " +
                            std::to_string(num_layers) + ")");
      }
    }
  }
  if (kind == PlanKind::outside && depth < 1) {
    throw ContractError("mask plan: outside recurrence depth must be at least 1");
  }
}

bool MaskPlan::masks_layer(std::size_t i) const {
  return kind == PlanKind::inside && std::binary_search(layers.begin(), layers.end(), i);
}

std::string MaskPlan::describe() const {
  switch (kind) {
    case PlanKind::none: return "none";
    case PlanKind::outside: return "outside(t=" + std::to_string(depth) + ")";
    case PlanKind::inside: {
      std::string s = "inside{";
      for (std::size_t i = 0; i < layers.size(); ++i) s += (i ? "," : "") + std::to_string(layers[i]);
      return s + "}";
    }
  }
  return "none";
}

json MaskPlan::to_json() const {
  return json{{"kind", to_string(kind)}, {"layers", layers}, {"depth", depth}};
}

MaskPlan MaskPlan::from_json(const json& j) {
  MaskPlan p;
  p.kind = parse_plan_kind(j.value("kind", std::string("none")));
  p.layers = j.value("layers", std::vector<std::size_t>{});
  p.depth = j.value("depth", std::size_t{0});
  if (p.kind == PlanKind::inside) p = inside(p.layers);
  return p;
}

// ---------------------------------------------------------------------------
// Parameters

namespace {

template <typename T>
using LayerField = Var<T> LayerParams<T>::*;

template <typename T>
const std::vector<std::pair<const char*, LayerField<T>>>& layer_fields() {
  static const std::vector<std::pair<const char*, LayerField<T>>> fields = {
      {"attn.query.weight", &LayerParams<T>::query_w},
      {"attn.query.bias", &LayerParams<T>::query_b},
      {"attn.key.weight", &LayerParams<T>::key_w},
      {"attn.key.bias", &LayerParams<T>::key_b},
      {"attn.value.weight", &LayerParams<T>::value_w},
      {"attn.value.bias", &LayerParams<T>::value_b},
      {"attn.output.weight", &LayerParams<T>::output_w},
      {"attn.output.bias", &LayerParams<T>::output_b},
      {"attn.ln.gain", &LayerParams<T>::attn_ln_gain},
      {"attn.ln.bias", &LayerParams<T>::attn_ln_bias},
      {"ffn.in.weight", &LayerParams<T>::ffn_in_w},
      {"ffn.in.bias", &LayerParams<T>::ffn_in_b},
      {"ffn.out.weight", &LayerParams<T>::ffn_out_w},
      {"ffn.out.bias", &LayerParams<T>::ffn_out_b},
      {"ffn.ln.gain", &LayerParams<T>::ffn_ln_gain},
      {"ffn.ln.bias", &LayerParams<T>::ffn_ln_bias},
  };
  return fields;
}

template <typename T>
using ModelField = Var<T> ModelParams<T>::*;

template <typename T>
const std::vector<std::pair<const char*, ModelField<T>>>& head_fields() {
  static const std::vector<std::pair<const char*, ModelField<T>>> fields = {
      {"embeddings.token", &ModelParams<T>::token_emb},
      {"embeddings.position", &ModelParams<T>::position_emb},
      {"embeddings.segment", &ModelParams<T>::segment_emb},
      {"embeddings.ln.gain", &ModelParams<T>::emb_ln_gain},
      {"embeddings.ln.bias", &ModelParams<T>::emb_ln_bias},
  };
  return fields;
}

template <typename T>
const std::vector<std::pair<const char*, ModelField<T>>>& tail_fields() {
  static const std::vector<std::pair<const char*, ModelField<T>>> fields = {
      {"pooler.weight", &ModelParams<T>::pooler_w},
      {"pooler.bias", &ModelParams<T>::pooler_b},
      {"nsp.weight", &ModelParams<T>::nsp_w},
      {"nsp.bias", &ModelParams<T>::nsp_b},
  };
  return fields;
}

std::string layer_prefix(std::size_t i) { return "layer." + std::to_string(i) + "."; }
const std::string kOuterPrefix = "outer.";

Shape layer_field_shape(const std::string& field, const EncoderConfig& c) {
  const std::size_t d = c.hidden_size, f = c.ff_size;
  if (field == "ffn.in.weight") return {d, f};
  if (field == "ffn.in.bias") return {f};
  if (field == "ffn.out.weight") return {f, d};
  if (field.ends_with(".weight")) return {d, d};
  return {d};
}

Shape model_field_shape(const std::string& field, const EncoderConfig& c) {
  const std::size_t d = c.hidden_size;
  if (field == "embeddings.token") return {c.vocab_size, d};
  if (field == "embeddings.position") return {c.max_positions, d};
  if (field == "embeddings.segment") return {c.segment_types, d};
  if (field == "pooler.weight") return {d, d};
  if (field == "nsp.weight") return {d, 2};
  if (field == "nsp.bias") return {2};
  return {d};
}

bool is_gain(const std::string& name) { return name.ends_with(".gain"); }
bool is_weight(const std::string& name) {
  return name.ends_with(".weight") || (name.starts_with("embeddings.") && !name.starts_with("embeddings.ln"));
}

// Fills a fresh parameter set through a per-name tensor factory.
template <typename Factory>
ModelParams<float> build_params(const EncoderConfig& config, PlanKind kind, Factory&& make) {
  config.validate();
  ModelParams<float> p;
  for (const auto& [name, field] : head_fields<float>()) {
    p.*field = Var<float>::parameter(make(std::string(name), model_field_shape(name, config)));
  }
  const auto make_layer = [&](const std::string& prefix) {
    LayerParams<float> layer;
    for (const auto& [name, field] : layer_fields<float>()) {
      layer.*field =
          Var<float>::parameter(make(prefix + name, layer_field_shape(name, config)));
    }
    return layer;
  };
  for (std::size_t i = 0; i < config.num_layers; ++i) p.layers.push_back(make_layer(layer_prefix(i)));
  if (kind == PlanKind::outside) p.outer = make_layer(kOuterPrefix);
  for (const auto& [name, field] : tail_fields<float>()) {
    p.*field = Var<float>::parameter(make(std::string(name), model_field_shape(name, config)));
  }
  return p;
}

}  // namespace

template <typename T>
std::vector<std::pair<std::string, Var<T>>> ModelParams<T>::named() const {
  std::vector<std::pair<std::string, Var<T>>> out;
  for (const auto& [name, field] : head_fields<T>()) out.emplace_back(name, this->*field);
  const auto add_layer = [&](const std::string& prefix, const LayerParams<T>& layer) {
    for (const auto& [name, field] : layer_fields<T>()) out.emplace_back(prefix + name, layer.*field);
  };
  for (std::size_t i = 0; i < layers.size(); ++i) add_layer(layer_prefix(i), layers[i]);
  if (outer) add_layer(kOuterPrefix, *outer);
  for (const auto& [name, field] : tail_fields<T>()) out.emplace_back(name, this->*field);
  return out;
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
  const auto conv = [](const Var<T>& v) { return Var<U>::parameter(v.value().template cast<U>()); };
  const auto conv_layer = [&](const LayerParams<T>& l) {
    LayerParams<U> out;
    const auto& src = layer_fields<T>();
    const auto& dst = layer_fields<U>();
    for (std::size_t k = 0; k < src.size(); ++k) out.*(dst[k].second) = conv(l.*(src[k].second));
    return out;
  };
  ModelParams<U> out;
  for (std::size_t k = 0; k < head_fields<T>().size(); ++k) {
    out.*(head_fields<U>()[k].second) = conv(this->*(head_fields<T>()[k].second));
  }
  for (const auto& l : layers) out.layers.push_back(conv_layer(l));
  if (outer) out.outer = conv_layer(*outer);
  for (std::size_t k = 0; k < tail_fields<T>().size(); ++k) {
    out.*(tail_fields<U>()[k].second) = conv(this->*(tail_fields<T>()[k].second));
  }
  return out;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<float>::cast<float>() const;

NamedShapes param_shapes(const EncoderConfig& config, PlanKind kind) {
  NamedShapes out;
  for (const auto& [name, field] : head_fields<float>()) out.emplace_back(name, model_field_shape(name, config));
  const auto add_layer = [&](const std::string& prefix) {
    for (const auto& [name, field] : layer_fields<float>()) {
      out.emplace_back(prefix + name, layer_field_shape(name, config));
    }
  };
  for (std::size_t i = 0; i < config.num_layers; ++i) add_layer(layer_prefix(i));
  if (kind == PlanKind::outside) add_layer(kOuterPrefix);
  for (const auto& [name, field] : tail_fields<float>()) out.emplace_back(name, model_field_shape(name, config));
  return out;
}

std::size_t parameter_count(const EncoderConfig& config, PlanKind kind) {
  std::size_t n = 0;
  for (const auto& [name, dims] : param_shapes(config, kind)) n += num::shape_size(dims);
  return n;
}

ModelParams<float> init_params(const EncoderConfig& config, PlanKind kind, std::uint64_t seed) {
  num::Rng rng(seed);
  return build_params(config, kind, [&](const std::string& name, const Shape& dims) {
    Tensor<float> t(dims);
    if (is_gain(name)) {
      for (auto& v : t.data()) v = 1.0f;
    } else if (is_weight(name)) {
      for (auto& v : t.data()) v = static_cast<float>(rng.truncated_normal(0.02));
    }
    return t;
  });
}

ModelParams<float> zero_params(const EncoderConfig& config, PlanKind kind) {
  return build_params(config, kind, [](const std::string& name, const Shape& dims) {
    return is_gain(name) ? Tensor<float>::full(dims, 1.0f) : Tensor<float>(dims);
  });
}

ModelParams<float> params_from_tensors(const EncoderConfig& config, PlanKind kind,
                                       std::vector<std::pair<std::string, Tensor<float>>> tensors) {
  std::map<std::string, Tensor<float>> by_name;
  for (auto& [name, t] : tensors) {
    if (!by_name.emplace(name, std::move(t)).second) {
      throw FormatError("duplicate tensor '" + name + "'");
    }
  }
  std::set<std::string> expected;
  for (const auto& [name, dims] : param_shapes(config, kind)) expected.insert(name);
  for (const auto& [name, t] : by_name) {
    if (!expected.count(name)) throw FormatError("unexpected tensor '" + name + "' for this config");
  }
  return build_params(config, kind, [&](const std::string& name, const Shape& dims) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("missing tensor '" + name + "'");
    if (it->second.dims() != dims) {
      throw FormatError("tensor '" + name + "' has dims " + num::shape_str(it->second.dims()) +
                        ", config expects " + num::shape_str(dims));
    }
    return std::move(it->second);
  });
}

// ---------------------------------------------------------------------------
// Forward

template <typename T>
std::vector<Var<T>> attention_heads(const Var<T>& hidden, const LayerParams<T>& layer,
                                    const MaskMatrix* mask, const EncoderConfig& config) {
  const std::size_t n = hidden.value().rows();
  if (mask && mask->size() != n) {
    throw ShapeError("attention: mask of size " + std::to_string(mask->size()) +
                     " for a sequence of " + std::to_string(n) + " tokens");
  }
  const std::size_t dk = config.head_size();
  const T scale_factor = config.scale_mode == ScaleMode::sqrt_dk
                             ? static_cast<T>(1.0 / std::sqrt(static_cast<double>(dk)))
                             : static_cast<T>(1.0 / static_cast<double>(dk));
  const Var<T> q = num::affine(hidden, layer.query_w, layer.query_b);
  const Var<T> k = num::affine(hidden, layer.key_w, layer.key_b);
  const Var<T> v = num::affine(hidden, layer.value_w, layer.value_b);
  std::vector<Var<T>> heads;
  heads.reserve(config.num_heads);
  for (std::size_t h = 0; h < config.num_heads; ++h) {
    const Var<T> qh = num::slice_cols(q, h * dk, dk);
    const Var<T> kh = num::slice_cols(k, h * dk, dk);
    const Var<T> vh = num::slice_cols(v, h * dk, dk);
    const Var<T> scores = num::scale(num::matmul(qh, num::transpose(kh)), scale_factor);
    const Var<T> probs =
        mask ? num::masked_softmax(scores, *mask, config.mask_mode) : num::softmax_rows(scores);
    heads.push_back(num::matmul(probs, vh));
  }
  return heads;
}

template <typename T>
Var<T> attention_layer(const Var<T>& hidden, const LayerParams<T>& layer, const MaskMatrix* mask,
                       const EncoderConfig& config, const ForwardOptions& options) {
  const auto maybe_dropout = [&](const Var<T>& x) {
    if (!options.train || config.dropout_rate <= 0.0) return x;
    if (!options.rng) throw ContractError("train-mode forward needs a dropout generator");
    return num::dropout(x, config.dropout_rate, *options.rng);
  };
  const T eps = static_cast<T>(config.layer_norm_eps);
  const Var<T> attn = num::affine(num::concat_cols(attention_heads(hidden, layer, mask, config)),
                                  layer.output_w, layer.output_b);
  const Var<T> h1 = num::layer_norm(num::add(hidden, maybe_dropout(attn)), layer.attn_ln_gain,
                                    layer.attn_ln_bias, eps);
  const Var<T> inner = num::gelu(num::affine(h1, layer.ffn_in_w, layer.ffn_in_b));
  const Var<T> ffn = num::affine(inner, layer.ffn_out_w, layer.ffn_out_b);
  return num::layer_norm(num::add(h1, maybe_dropout(ffn)), layer.ffn_ln_gain, layer.ffn_ln_bias, eps);
}

template <typename T>
EncoderOutput<T> encoder_forward(const tok::Encoding& encoding, const MaskMatrix* mask,
                                 const ModelParams<T>& params, const EncoderConfig& config,
                                 const MaskPlan& plan, const ForwardOptions& options) {
  const std::size_t n = encoding.size();
  if (n == 0) throw ContractError("encoder_forward: empty encoding");
  if (n > config.max_positions) {
    throw ContractError("encoder_forward: sequence of " + std::to_string(n) +
                        " tokens exceeds max_positions " + std::to_string(config.max_positions));
  }
  if (plan.uses_mask() && !mask) throw ContractError("encoder_forward: plan " + plan.describe() + " needs a mask");
  if (plan.kind == PlanKind::outside && !params.outer) {
    throw ContractError("encoder_forward: outside plan but the model has no outer layer");
  }
  if (params.layers.size() != config.num_layers) {
    throw ContractError("encoder_forward: model has " + std::to_string(params.layers.size()) +
                        " layers, config says " + std::to_string(config.num_layers));
  }
  std::vector<std::size_t> ids(encoding.token_ids.begin(), encoding.token_ids.end());
  std::vector<std::size_t> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = i;
  std::vector<std::size_t> segments(encoding.segment_ids.begin(), encoding.segment_ids.end());

  Var<T> h = num::add(num::add(num::embedding(params.token_emb, ids),
                               num::embedding(params.position_emb, positions)),
                      num::embedding(params.segment_emb, segments));
  h = num::layer_norm(h, params.emb_ln_gain, params.emb_ln_bias, static_cast<T>(config.layer_norm_eps));
  if (options.train && config.dropout_rate > 0.0) {
    if (!options.rng) throw ContractError("train-mode forward needs a dropout generator");
    h = num::dropout(h, config.dropout_rate, *options.rng);
  }

  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    h = attention_layer(h, params.layers[i], plan.masks_layer(i) ? mask : nullptr, config, options);
  }
  if (plan.kind == PlanKind::outside) {
    for (std::size_t step = 0; step < plan.depth; ++step) {
      h = attention_layer(h, *params.outer, mask, config, options);
    }
  }
  const Var<T> pooled = num::tanh(num::affine(num::row(h, 0), params.pooler_w, params.pooler_b));
  return {h, pooled};
}

template <typename T>
Var<T> nsp_logits(const Var<T>& pooled, const ModelParams<T>& params) {
  return num::affine(pooled, params.nsp_w, params.nsp_b);
}

template <typename T>
T nsp_probability(const Var<T>& pooled, const ModelParams<T>& params) {
  const auto probs = num::softmax_rows(nsp_logits(pooled, params).value());
  return probs[kIsNextClass];
}

#define DEPWSC_INSTANTIATE_ENCODER(T)                                                              \
  template std::vector<Var<T>> attention_heads(const Var<T>&, const LayerParams<T>&,              \
                                               const MaskMatrix*, const EncoderConfig&);          \
  template Var<T> attention_layer(const Var<T>&, const LayerParams<T>&, const MaskMatrix*,         \
                                  const EncoderConfig&, const ForwardOptions&);                    \
  template EncoderOutput<T> encoder_forward(const tok::Encoding&, const MaskMatrix*,               \
                                            const ModelParams<T>&, const EncoderConfig&,           \
                                            const MaskPlan&, const ForwardOptions&);               \
  template Var<T> nsp_logits(const Var<T>&, const ModelParams<T>&);                                \
  template T nsp_probability(const Var<T>&, const ModelParams<T>&);

DEPWSC_INSTANTIATE_ENCODER(float)
DEPWSC_INSTANTIATE_ENCODER(double)

#undef DEPWSC_INSTANTIATE_ENCODER

}  // namespace depwsc::enc
