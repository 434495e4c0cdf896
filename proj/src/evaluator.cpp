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

#include "depwsc/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <unordered_map>

#include "depwsc/error.hpp"

namespace depwsc::eval {

std::optional<double> Count::accuracy() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

bool any_schema(const Schema&) { return true; }
bool is_associative(const Schema& s) { return s.associative; }
bool is_non_associative(const Schema& s) { return !s.associative; }
bool is_unswitched(const Schema& s) { return s.switchable && !s.switched; }
bool is_switched(const Schema& s) { return s.switchable && s.switched; }

namespace {

std::unordered_map<std::string, const Prediction*> by_id(const std::vector<Prediction>& predictions) {
  std::unordered_map<std::string, const Prediction*> out;
  for (const auto& p : predictions) out.emplace(p.schema_id, &p);
  return out;
}

const Prediction& lookup(const std::unordered_map<std::string, const Prediction*>& index,
                         const std::string& id) {
  const auto it = index.find(id);
  if (it == index.end()) throw CoverageError("no prediction for schema '" + id + "'");
  return *it->second;
}

std::string format_accuracy(const Count& c) {
  const auto acc = c.accuracy();
  if (!acc) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *acc);
  return buf;
}

nlohmann::json count_json(const Count& c) {
  nlohmann::json j = {{"correct", c.correct}, {"total", c.total}};
  const auto acc = c.accuracy();
  j["accuracy"] = acc ? nlohmann::json(*acc) : nlohmann::json("n/a");
  return j;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

Count accuracy(const std::vector<Prediction>& predictions, const std::vector<Schema>& schemas,
               const Filter& filter) {
  const auto index = by_id(predictions);
  Count c;
  for (const auto& s : schemas) {
    if (!filter(s)) continue;
    ++c.total;
    if (lookup(index, s.id).correct) ++c.correct;
  }
  return c;
}

Count consistent_accuracy(const std::vector<Prediction>& predictions, const std::vector<Schema>& schemas) {
  struct Group {
    const Schema* original = nullptr;
    const Schema* switched = nullptr;
  };
  std::map<std::string, Group> groups;
  for (const auto& s : schemas) {
    if (!s.switchable) continue;
    auto& g = groups[*s.switch_group];
    auto& slot = s.switched ? g.switched : g.original;
    if (slot) {
      throw PairingError("switch group '" + *s.switch_group + "' has more than one " +
                         (s.switched ? "switched" : "original") + " member ('" + slot->id + "', '" +
                         s.id + "')");
    }
    slot = &s;
  }
  const auto index = by_id(predictions);
  Count c;
  for (const auto& [name, g] : groups) {
    if (!g.original || !g.switched) {
      throw PairingError("switch group '" + name + "' has no " + (g.original ? "switched" : "original") +
                         " member");
    }
    ++c.total;
    if (lookup(index, g.original->id).correct && lookup(index, g.switched->id).correct) ++c.correct;
  }
  return c;
}

const std::vector<std::string>& report_keys() {
  static const std::vector<std::string> keys = {
      "full", "associative", "non_associative", "unswitched", "switched", "consistent",
      "ties", "config_digest", "checkpoint_digest", "predictions"};
  return keys;
}

nlohmann::json Report::to_json() const {
  nlohmann::json j;
  j["full"] = count_json(full);
  j["associative"] = count_json(associative);
  j["non_associative"] = count_json(non_associative);
  j["unswitched"] = count_json(unswitched);
  j["switched"] = count_json(switched);
  j["consistent"] = count_json(consistent);
  j["ties"] = ties;
  j["config_digest"] = config_digest;
  j["checkpoint_digest"] = checkpoint_digest;
  j["predictions"] = nlohmann::json::array();
  for (const auto& p : rows) {
    j["predictions"].push_back({{"id", p.schema_id},
                                {"scores", {p.scores[0], p.scores[1]}},
                                {"predicted_index", p.predicted_index},
                                {"tie", p.tie},
                                {"correct", p.correct}});
  }
  return j;
}

std::string Report::to_table(const std::string& label) const {
  const std::vector<std::pair<std::string, const Count*>> cols = {
      {"Full", &full},           {"Assoc.", &associative}, {"Non-Assoc.", &non_associative},
      {"Unswitched", &unswitched}, {"Switched", &switched}, {"Consistent", &consistent}};
  std::vector<std::string> cells;
  std::size_t width = 0;
  for (const auto& [name, c] : cols) {
    cells.push_back(format_accuracy(*c) + " (" + std::to_string(c->correct) + "/" +
                    std::to_string(c->total) + ")");
    width = std::max({width, cells.back().size(), name.size()});
  }
  width += 2;
  const std::size_t label_width = std::max<std::size_t>(label.size(), 5) + 2;
  std::string head = pad("Model", label_width);
  std::string body = pad(label, label_width);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    head += pad(cols[k].first, width);
    body += pad(cells[k], width);
  }
  while (!head.empty() && head.back() == ' ') head.pop_back();
  while (!body.empty() && body.back() == ' ') body.pop_back();
  return head + "\n" + body + "\nties: " + std::to_string(ties) + "\n";
}

Report summarize(const std::vector<Prediction>& predictions, const std::vector<Schema>& schemas,
                 const std::string& config_digest, const std::string& checkpoint_digest) {
  Report r;
  r.full = accuracy(predictions, schemas, any_schema);
  r.associative = accuracy(predictions, schemas, is_associative);
  r.non_associative = accuracy(predictions, schemas, is_non_associative);
  r.unswitched = accuracy(predictions, schemas, is_unswitched);
  r.switched = accuracy(predictions, schemas, is_switched);
  r.consistent = consistent_accuracy(predictions, schemas);
  const auto index = by_id(predictions);
  for (const auto& s : schemas) r.rows.push_back(lookup(index, s.id));
  std::sort(r.rows.begin(), r.rows.end(),
            [](const Prediction& a, const Prediction& b) { return a.schema_id < b.schema_id; });
  r.ties = static_cast<std::size_t>(std::count_if(r.rows.begin(), r.rows.end(), [](const auto& p) { return p.tie; }));
  r.config_digest = config_digest;
  r.checkpoint_digest = checkpoint_digest;
  return r;
}

Report evaluate(const schema::ModelBundle& model, const std::vector<Schema>& corpus,
                const schema::ParseIndex& parses, const std::string& config_digest,
                const std::string& checkpoint_digest) {
  std::vector<Prediction> predictions;
  predictions.reserve(corpus.size());
  for (const auto& s : corpus) predictions.push_back(schema::resolve(model, s, parses));
  return summarize(predictions, corpus, config_digest, checkpoint_digest);
}

std::vector<CurveRow> size_curve(const schema::ModelBundle& initial,
                                 const std::vector<Schema>& train_corpus,
                                 const schema::ParseIndex& train_parses,
                                 const std::vector<Schema>& eval_corpus,
                                 const schema::ParseIndex& eval_parses,
                                 const std::vector<double>& fractions, std::uint64_t seed,
                                 const train::Hyperparams& hyper, const std::string& config_digest) {
  for (const double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw ContractError("fraction " + std::to_string(f) + " outside [0, 1]");
  }
  std::vector<CurveRow> rows;
  for (const double f : fractions) {
    CurveRow row;
    row.fraction = f;
    schema::ModelBundle model = initial;
    model.params = initial.params.cast<float>();
    const auto subset = train::subsample(train_corpus, f, seed);
    row.train_schemas = subset.size();
    if (!subset.empty()) {
      const auto examples = train::make_training_examples(subset, model.vocab, train_parses, hyper.max_seq_len);
      train::Hyperparams h = hyper;
      h.seed = seed;
      row.log = train::fine_tune(model.params, examples, h, model.config, model.plan).log;
    }
    row.report = evaluate(model, eval_corpus, eval_parses, config_digest);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string curve_table(const std::vector<CurveRow>& rows) {
  const std::vector<std::string> head = {"Fraction", "Train", "Full", "Assoc.", "Non-Assoc.",
                                         "Unswitched", "Switched", "Consistent", "Ties", "Config"};
  std::vector<std::vector<std::string>> cells = {head};
  for (const auto& r : rows) {
    char frac[32];
    std::snprintf(frac, sizeof frac, "%.3f", r.fraction);
    const auto& rep = r.report;
    cells.push_back({frac, std::to_string(r.train_schemas), format_accuracy(rep.full),
                     format_accuracy(rep.associative), format_accuracy(rep.non_associative),
                     format_accuracy(rep.unswitched), format_accuracy(rep.switched),
                     format_accuracy(rep.consistent), std::to_string(rep.ties),
                     rep.config_digest.empty() ? "-" : rep.config_digest});
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t k = 0; k < line.size(); ++k) width[k] = std::max(width[k], line[k].size());
  }
  std::string out;
  for (const auto& line : cells) {
    std::string s;
    for (std::size_t k = 0; k < line.size(); ++k) s += pad(line[k], width[k] + 2);
    while (!s.empty() && s.back() == ' ') s.pop_back();
    out += s + "\n";
  }
  return out;
}

nlohmann::json curve_json(const std::vector<CurveRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json log = nlohmann::json::array();
    for (const auto& e : r.log) log.push_back(e.to_json());
    out.push_back({{"fraction", r.fraction}, {"train_schemas", r.train_schemas},
                   {"report", r.report.to_json()}, {"log", log}});
  }
  return out;
}

}  // namespace depwsc::eval
