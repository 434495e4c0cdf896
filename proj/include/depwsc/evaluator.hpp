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

#include "depwsc/schema.hpp"
#include "depwsc/trainer.hpp"

namespace depwsc::eval {

using schema::Prediction;
using schema::Schema;

struct Count {
  std::size_t correct = 0;
  std::size_t total = 0;

  /// Undefined over an empty set.
  std::optional<double> accuracy() const;
  bool operator==(const Count&) const = default;
};

using Filter = std::function<bool(const Schema&)>;

bool any_schema(const Schema&);
bool is_associative(const Schema&);
bool is_non_associative(const Schema&);
bool is_unswitched(const Schema&);  // switchable original
bool is_switched(const Schema&);    // switchable counterpart

/// correct/total over the schemas passing `filter`. Every such schema needs
/// a prediction (CoverageError naming the id otherwise).
Count accuracy(const std::vector<Prediction>& predictions, const std::vector<Schema>& schemas,
               const Filter& filter = any_schema);

/// Groups switchable schemas by switch_group; a group counts as correct when
/// both its original and switched member are. Each group needs exactly one
/// of each (PairingError naming the group otherwise).
Count consistent_accuracy(const std::vector<Prediction>& predictions, const std::vector<Schema>& schemas);

struct Report {
  Count full, associative, non_associative, unswitched, switched, consistent;
  std::vector<Prediction> rows;  // sorted by schema id
  std::size_t ties = 0;
  std::string config_digest;
  std::string checkpoint_digest;

  nlohmann::json to_json() const;
  /// One aligned row under the six metric columns, labelled `label`.
  std::string to_table(const std::string& label = "model") const;
};

/// Key set of Report::to_json, in document order.
const std::vector<std::string>& report_keys();

Report summarize(const std::vector<Prediction>& predictions, const std::vector<Schema>& schemas,
                 const std::string& config_digest = {}, const std::string& checkpoint_digest = {});

Report evaluate(const schema::ModelBundle& model, const std::vector<Schema>& corpus,
                const schema::ParseIndex& parses, const std::string& config_digest = {},
                const std::string& checkpoint_digest = {});

struct CurveRow {
  double fraction = 0.0;
  std::size_t train_schemas = 0;
  Report report;
  std::vector<train::EpochLog> log;
};

/// For each fraction: subsample the training corpus, fine-tune a copy of
/// the shared initial model, evaluate on the evaluation corpus.
/// `initial.params` is never modified.
std::vector<CurveRow> size_curve(const schema::ModelBundle& initial,
                                 const std::vector<Schema>& train_corpus,
                                 const schema::ParseIndex& train_parses,
                                 const std::vector<Schema>& eval_corpus,
                                 const schema::ParseIndex& eval_parses,
                                 const std::vector<double>& fractions, std::uint64_t seed,
                                 const train::Hyperparams& hyper, const std::string& config_digest = {});

std::string curve_table(const std::vector<CurveRow>& rows);
nlohmann::json curve_json(const std::vector<CurveRow>& rows);

}  // namespace depwsc::eval
