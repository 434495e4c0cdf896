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

#include <set>

#include "doctest.h"

#include "depwsc/error.hpp"
#include "depwsc/evaluator.hpp"
#include "depwsc/numcore/rng.hpp"
#include "synth.hpp"

using namespace depwsc;
using namespace depwsc::eval;

namespace {

std::vector<Prediction> predictions_for(const std::vector<Schema>& schemas, const std::vector<bool>& correct) {
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < schemas.size(); ++i) {
    const auto& s = schemas[i];
    const std::size_t pick = correct[i] ? s.answer_index : 1 - s.answer_index;
    out.push_back(schema::decide(s.id, {pick == 0 ? 0.9 : 0.1, pick == 0 ? 0.1 : 0.9}, s.answer_index));
  }
  return out;
}

Schema make(const std::string& id, bool switchable, bool switched, const std::string& group, bool assoc = false) {
  Schema s;
  s.id = id;
  s.words = {"it", "fell", "."};
  s.pronoun_begin = 0;
  s.pronoun_end = 1;
  s.candidates = {"a", "b"};
  s.associative = assoc;
  s.switchable = switchable;
  s.switched = switched;
  if (switchable) s.switch_group = group;
  return s;
}

}  // namespace

TEST_CASE("consistency over three pairs with one fully correct is one third") {
  const std::vector<Schema> schemas = {make("a", true, false, "g1"), make("a-sw", true, true, "g1"),
                                       make("b", true, false, "g2"), make("b-sw", true, true, "g2"),
                                       make("c", true, false, "g3"), make("c-sw", true, true, "g3")};
  const auto preds = predictions_for(schemas, {true, true, true, false, false, false});
  const auto c = consistent_accuracy(preds, schemas);
  CHECK(c == Count{1, 3});
  CHECK(*c.accuracy() == doctest::Approx(1.0 / 3.0));
  CHECK(accuracy(preds, schemas, is_unswitched) == Count{2, 3});
  CHECK(accuracy(preds, schemas, is_switched) == Count{1, 3});
}

TEST_CASE("an empty subset has undefined accuracy rendered as n/a") {
  const std::vector<Schema> schemas = {make("a", false, false, ""), make("b", false, false, "")};
  const auto r = summarize(predictions_for(schemas, {true, false}), schemas);
  CHECK(r.full == Count{1, 2});
  CHECK_FALSE(r.associative.accuracy().has_value());
  CHECK_FALSE(r.consistent.accuracy().has_value());
  const auto j = r.to_json();
  CHECK(j["associative"]["accuracy"] == "n/a");
  CHECK(j["full"]["accuracy"] == 0.5);
  CHECK(r.to_table("m").find("n/a (0/0)") != std::string::npos);
  CHECK(r.to_table("m").find("0.5000 (1/2)") != std::string::npos);
}

TEST_CASE("missing predictions and broken pairs are reported by id") {
  const std::vector<Schema> schemas = {make("a", true, false, "g1"), make("a-sw", true, true, "g1")};
  auto preds = predictions_for(schemas, {true, true});
  preds.pop_back();
  CHECK_THROWS_WITH_AS(accuracy(preds, schemas), doctest::Contains("a-sw"), CoverageError);
  const std::vector<Schema> lonely = {make("a", true, false, "g1")};
  CHECK_THROWS_WITH_AS(consistent_accuracy(predictions_for(lonely, {true}), lonely), doctest::Contains("g1"),
                       PairingError);
  const std::vector<Schema> doubled = {make("a", true, false, "g1"), make("b", true, false, "g1")};
  CHECK_THROWS_AS(consistent_accuracy(predictions_for(doubled, {true, true}), doubled), PairingError);
}

TEST_CASE("report invariants hold on random prediction sets") {
  num::Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto corpus = testing::make_corpus({.count = 2 + 2 * rng.below(10), .seed = rng.next_u64()});
    std::vector<bool> correct;
    for (std::size_t i = 0; i < corpus.schemas.size(); ++i) correct.push_back(rng.below(2) == 1);
    const auto r = summarize(predictions_for(corpus.schemas, correct), corpus.schemas);
    CHECK(r.full.correct == r.associative.correct + r.non_associative.correct);
    CHECK(r.full.total == r.associative.total + r.non_associative.total);
    CHECK(r.consistent.correct <= std::min(r.unswitched.correct, r.switched.correct));
    CHECK(r.rows.size() == corpus.schemas.size());
    for (std::size_t i = 1; i < r.rows.size(); ++i) CHECK(r.rows[i - 1].schema_id < r.rows[i].schema_id);
    // Flipping every prediction swaps correct and incorrect.
    std::vector<bool> flipped;
    for (bool b : correct) flipped.push_back(!b);
    const auto f = summarize(predictions_for(corpus.schemas, flipped), corpus.schemas);
    CHECK(f.full.correct == r.full.total - r.full.correct);
    if (r.consistent.correct == r.consistent.total && r.consistent.total > 0) CHECK(f.consistent.correct == 0);
  }
}

TEST_CASE("report json has the documented key set") {
  const auto corpus = testing::make_corpus({.count = 4, .seed = 1});
  const auto r = summarize(predictions_for(corpus.schemas, {true, false, true, true}), corpus.schemas, "cfg", "ck");
  const auto j = r.to_json();
  std::set<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.insert(k);
  CHECK(keys == std::set<std::string>(report_keys().begin(), report_keys().end()));
  CHECK(j["config_digest"] == "cfg");
  CHECK(j["predictions"].size() == 4);
}

TEST_CASE("size curve leaves the initial model untouched and is reproducible") {
  const auto train = testing::make_corpus({.count = 8, .seed = 2});
  const auto held = testing::make_corpus({.count = 6, .seed = 3, .id_prefix = "held"});
  schema::ModelBundle model{.config = {}, .plan = enc::MaskPlan::none(), .params = {},
                            .vocab = testing::synth_vocab(), .max_seq_len = 32};
  model.config.num_layers = 1;
  model.config.num_heads = 2;
  model.config.hidden_size = 8;
  model.config.ff_size = 16;
  model.config.vocab_size = model.vocab.size();
  model.config.max_positions = 32;
  model.params = enc::init_params(model.config, enc::PlanKind::none, 4);
  const auto before = model.params.cast<float>();
  train::Hyperparams h;
  h.max_epochs = 2;
  h.batch_size = 4;
  h.max_seq_len = 32;
  const std::vector<double> fractions = {0.0, 0.5, 1.0};
  const auto rows = size_curve(model, train.schemas, train.parses, held.schemas, held.parses, fractions, 5, h);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].train_schemas == 0);
  CHECK(rows[0].log.empty());
  CHECK(rows[1].train_schemas == 4);
  CHECK(rows[2].log.size() == 2);
  for (const auto& row : rows) CHECK(row.report.full.total == 6);
  const auto named = model.params.named();
  const auto orig = before.named();
  for (std::size_t i = 0; i < named.size(); ++i) CHECK(named[i].second.value() == orig[i].second.value());
  // Fraction 0 is the untrained model.
  CHECK(rows[0].report.to_json()["predictions"] == evaluate(model, held.schemas, held.parses).to_json()["predictions"]);
  const auto again = size_curve(model, train.schemas, train.parses, held.schemas, held.parses, fractions, 5, h);
  CHECK(curve_json(again) == curve_json(rows));
  CHECK(curve_table(rows).find("0.50") != std::string::npos);
  CHECK_THROWS_AS(size_curve(model, train.schemas, train.parses, held.schemas, held.parses, {1.2}, 5, h),
                  ContractError);
}
