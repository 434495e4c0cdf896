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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "depwsc/encoder.hpp"
#include "depwsc/schema.hpp"

namespace depwsc::train {

inline constexpr int kIsNextLabel = 1;
inline constexpr int kNotNextLabel = 0;

struct TrainExample {
  tok::Encoding encoding;
  std::optional<num::MaskMatrix> mask;
  int label = kNotNextLabel;
  std::string schema_id;
  std::size_t candidate_index = 0;
};

/// Two examples per schema: the correct substitution labelled IsNext, the
/// other NotNext. Sorted by schema id, then candidate index. Every schema
/// needs parses for both candidate sentences.
std::vector<TrainExample> make_training_examples(const std::vector<schema::Schema>& schemas,
                                                 const tok::Vocab& vocab,
                                                 const schema::ParseIndex& parses,
                                                 std::size_t max_seq_len);

struct Hyperparams {
  double base_lr = 5e-4;
  std::size_t batch_size = 8;
  double warmup_frac = 0.1;
  std::size_t max_epochs = 50;
  double dropout = 0.1;
  std::uint64_t seed = 0;
  std::size_t max_seq_len = 64;
  double weight_decay = 0.01;

  void validate() const;

  /// Fine-tuning settings used for the 110M- and 340M-parameter encoders.
  static Hyperparams reference_base();
  static Hyperparams reference_large();

  nlohmann::json to_json() const;
  static Hyperparams from_json(const nlohmann::json& j);
  bool operator==(const Hyperparams&) const = default;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;        // mean train-mode loss over the epoch's examples
  double eval_loss = 0.0;   // mean eval-mode loss after the epoch
  double train_accuracy = 0.0;  // eval-mode, threshold on IsNext probability 0.5
  double last_lr = 0.0;
  std::size_t steps = 0;    // optimizer steps so far

  nlohmann::json to_json() const;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t steps = 0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Optimizes `params` in place on the NSP cross-entropy of each example.
/// The encoder config's dropout rate is replaced by hyper.dropout.
/// Shuffle and dropout draws come from sub-seeds of hyper.seed.
TrainResult fine_tune(enc::ModelParams<float>& params, const std::vector<TrainExample>& examples,
                      const Hyperparams& hyper, const enc::EncoderConfig& config,
                      const enc::MaskPlan& plan, const EpochCallback& on_epoch = {});

/// Eval-mode NSP cross-entropy of one example.
double example_loss(const enc::ModelParams<float>& params, const TrainExample& example,
                    const enc::EncoderConfig& config, const enc::MaskPlan& plan);

/// round(fraction·N) schemas drawn without replacement, kept in input order.
std::vector<schema::Schema> subsample(const std::vector<schema::Schema>& schemas, double fraction,
                                      std::uint64_t seed);

}  // namespace depwsc::train
