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

#include "depwsc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "depwsc/error.hpp"
#include "depwsc/numcore/optim.hpp"

namespace depwsc::train {

using num::Var;

std::vector<TrainExample> make_training_examples(const std::vector<schema::Schema>& schemas,
                                                 const tok::Vocab& vocab,
                                                 const schema::ParseIndex& parses,
                                                 std::size_t max_seq_len) {
  std::vector<const schema::Schema*> order;
  for (const auto& s : schemas) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) { return a->id < b->id; });

  std::vector<TrainExample> out;
  out.reserve(2 * schemas.size());
  for (const auto* s : order) {
    const auto pair = schema::generate_candidates(*s);
    for (std::size_t k = 0; k < 2; ++k) {
      const auto it = parses.find(schema::parse_key(s->id, k));
      if (it == parses.end()) {
        throw AlignmentError("schema '" + s->id + "': no parse for candidate " + std::to_string(k) +
                             " (expected sent_id " + schema::parse_key(s->id, k) + ")");
      }
      auto prepared = schema::prepare_candidate(pair.members[k], s->id, &it->second, vocab, max_seq_len);
      TrainExample ex;
      ex.encoding = std::move(prepared.encoding);
      ex.mask = std::move(prepared.mask);
      ex.label = k == s->answer_index ? kIsNextLabel : kNotNextLabel;
      ex.schema_id = s->id;
      ex.candidate_index = k;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

void Hyperparams::validate() const {
  if (!(base_lr >= 0.0) || !std::isfinite(base_lr)) throw ContractError("base_lr must be finite and >= 0");
  if (batch_size == 0) throw ContractError("batch_size must be positive");
  if (!(warmup_frac >= 0.0 && warmup_frac <= 1.0)) throw ContractError("warmup_frac must lie in [0, 1]");
  if (max_epochs == 0) throw ContractError("max_epochs must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ContractError("dropout must lie in [0, 1)");
  if (max_seq_len < 3) throw ContractError("max_seq_len must be at least 3");
  if (!(weight_decay >= 0.0)) throw ContractError("weight_decay must be >= 0");
}

Hyperparams Hyperparams::reference_base() {
  Hyperparams h;
  h.base_lr = 2e-5;
  h.batch_size = 16;
  h.warmup_frac = 0.5;
  h.max_epochs = 15;
  h.dropout = 0.1;
  h.max_seq_len = 128;
  return h;
}

Hyperparams Hyperparams::reference_large() {
  Hyperparams h = reference_base();
  h.batch_size = 2;
  h.warmup_frac = 0.7;
  return h;
}

nlohmann::json Hyperparams::to_json() const {
  return {{"lr", base_lr},           {"batch_size", batch_size}, {"warmup_frac", warmup_frac},
          {"epochs", max_epochs},    {"dropout", dropout},       {"seed", seed},
          {"max_seq_len", max_seq_len}, {"weight_decay", weight_decay}};
}

Hyperparams Hyperparams::from_json(const nlohmann::json& j) {
  Hyperparams h;
  h.base_lr = j.value("lr", h.base_lr);
  h.batch_size = j.value("batch_size", h.batch_size);
  h.warmup_frac = j.value("warmup_frac", h.warmup_frac);
  h.max_epochs = j.value("epochs", h.max_epochs);
  h.dropout = j.value("dropout", h.dropout);
  h.seed = j.value("seed", h.seed);
  h.max_seq_len = j.value("max_seq_len", h.max_seq_len);
  h.weight_decay = j.value("weight_decay", h.weight_decay);
  return h;
}

nlohmann::json EpochLog::to_json() const {
  return {{"epoch", epoch},       {"loss", loss},       {"eval_loss", eval_loss},
          {"train_accuracy", train_accuracy}, {"lr", last_lr}, {"steps", steps}};
}

namespace {

std::size_t target_class(int label) {
  return label == kIsNextLabel ? enc::kIsNextClass : enc::kNotNextClass;
}

const num::MaskMatrix* mask_for(const TrainExample& ex, const enc::MaskPlan& plan) {
  if (!plan.uses_mask()) return nullptr;
  if (!ex.mask) {
    throw ContractError("example " + ex.schema_id + "/" + std::to_string(ex.candidate_index) +
                        " has no mask but plan " + plan.describe() + " needs one");
  }
  return &*ex.mask;
}

}  // namespace

double example_loss(const enc::ModelParams<float>& params, const TrainExample& example,
                    const enc::EncoderConfig& config, const enc::MaskPlan& plan) {
  const auto out = enc::encoder_forward(example.encoding, mask_for(example, plan), params, config, plan);
  return num::cross_entropy(enc::nsp_logits(out.pooled, params), target_class(example.label)).value()[0];
}

TrainResult fine_tune(enc::ModelParams<float>& params, const std::vector<TrainExample>& examples,
                      const Hyperparams& hyper, const enc::EncoderConfig& config,
                      const enc::MaskPlan& plan, const EpochCallback& on_epoch) {
  if (examples.empty()) throw ContractError("fine_tune: no training examples");
  hyper.validate();
  enc::EncoderConfig cfg = config;
  cfg.dropout_rate = hyper.dropout;
  cfg.validate();
  plan.validate(cfg.num_layers);

  std::vector<num::NamedParam> named;
  std::vector<Var<float>> vars;
  for (auto& [name, var] : params.named()) {
    named.push_back({name, var});
    vars.push_back(var);
  }

  const std::size_t n = examples.size();
  const std::size_t batches_per_epoch = (n + hyper.batch_size - 1) / hyper.batch_size;
  num::AdamWOptions opts;
  opts.base_lr = hyper.base_lr;
  opts.warmup_frac = hyper.warmup_frac;
  opts.total_steps = hyper.max_epochs * batches_per_epoch;
  opts.weight_decay = hyper.weight_decay;
  auto state = num::make_optim_state(named, opts);

  num::Rng shuffle_rng(num::derive_seed(hyper.seed, "shuffle"));
  num::Rng dropout_rng(num::derive_seed(hyper.seed, "dropout"));
  enc::ForwardOptions train_opts{true, &dropout_rng};

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  for (std::size_t epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    double lr = 0.0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      const std::size_t begin = b * hyper.batch_size;
      const std::size_t end = std::min(n, begin + hyper.batch_size);
      Var<float> total;
      for (std::size_t i = begin; i < end; ++i) {
        const auto& ex = examples[order[i]];
        const auto out = enc::encoder_forward(ex.encoding, mask_for(ex, plan), params, cfg, plan, train_opts);
        const auto loss = num::cross_entropy(enc::nsp_logits(out.pooled, params), target_class(ex.label));
        const float v = loss.value()[0];
        if (!std::isfinite(v)) {
          throw NumericError("non-finite loss " + std::to_string(v) + " at epoch " + std::to_string(epoch) +
                             ", step " + std::to_string(state.step) + ", example " + ex.schema_id + "/" +
                             std::to_string(ex.candidate_index));
        }
        loss_sum += v;
        total = total.defined() ? num::add(total, loss) : loss;
      }
      const auto batch_loss = num::scale(total, 1.0f / static_cast<float>(end - begin));
      const auto grads = num::gradients(batch_loss, vars);
      lr = num::adamw_step(named, grads, state);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = loss_sum / static_cast<double>(n);
    entry.last_lr = lr;
    entry.steps = state.step;
    std::size_t correct = 0;
    double eval_loss = 0.0;
    for (const auto& ex : examples) {
      const auto out = enc::encoder_forward(ex.encoding, mask_for(ex, plan), params, cfg, plan);
      const auto logits = enc::nsp_logits(out.pooled, params);
      eval_loss += num::cross_entropy(logits, target_class(ex.label)).value()[0];
      const float p = num::softmax_rows(logits.value())[enc::kIsNextClass];
      if ((p > 0.5f) == (ex.label == kIsNextLabel)) ++correct;
    }
    entry.eval_loss = eval_loss / static_cast<double>(n);
    entry.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  result.steps = state.step;
  return result;
}

std::vector<schema::Schema> subsample(const std::vector<schema::Schema>& schemas, double fraction,
                                      std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ContractError("subsample fraction " + std::to_string(fraction) + " outside [0, 1]");
  }
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(schemas.size())));
  std::vector<std::size_t> idx(schemas.size());
  std::iota(idx.begin(), idx.end(), 0);
  num::Rng rng(num::derive_seed(seed, "subsample"));
  rng.shuffle(idx.begin(), idx.end());
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<schema::Schema> out;
  out.reserve(k);
  for (std::size_t i : idx) out.push_back(schemas[i]);
  return out;
}

}  // namespace depwsc::train
