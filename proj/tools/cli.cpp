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

#include "cli.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "depwsc/checkpoint.hpp"
#include "depwsc/depmask.hpp"
#include "depwsc/digest.hpp"
#include "depwsc/error.hpp"
#include "depwsc/evaluator.hpp"
#include "depwsc/schema.hpp"

namespace depwsc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

}  // namespace

json RunConfig::defaults() {
  return {{"num_layers", 2},        {"num_heads", 2},       {"hidden_size", 32},
          {"ff_size", 64},          {"max_positions", 64},  {"dropout", 0.1},
          {"layer_norm_eps", 1e-12}, {"scale_mode", "sqrt_dk"}, {"mask_mode", "additive"},
          {"plan", "none"},         {"layers", ""},         {"lr", 5e-4},
          {"batch_size", 8},        {"warmup_frac", 0.1},   {"epochs", 50},
          {"weight_decay", 0.01},   {"max_seq_len", 64},    {"seed", 0},
          {"vocab", ""},            {"corpus", ""},         {"parses", ""},
          {"eval_corpus", ""},      {"eval_parses", ""},    {"checkpoint", ""},
          {"out", "."},             {"fractions", "0,0.25,0.5,0.75,1"}};
}

void RunConfig::merge(const json& patch) {
  if (!patch.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [key, value] : patch.items()) set(key, value);
}

void RunConfig::set(const std::string& key, json value) {
  if (!values_.contains(key)) throw UsageError("unknown config key '" + key + "'");
  const auto& current = values_.at(key);
  const bool ok = (current.is_string() && value.is_string()) ||
                  (current.is_number() && value.is_number());
  if (!ok) throw UsageError("config key '" + key + "' has the wrong type");
  if (current.is_number_integer() && !value.is_number_integer()) {
    throw UsageError("config key '" + key + "' must be an integer");
  }
  if (current.is_number_integer() && value.is_number_integer() && value.get<std::int64_t>() < 0) {
    throw UsageError("config key '" + key + "' must not be negative");
  }
  values_[key] = std::move(value);
}

std::string RunConfig::str(const std::string& key) const { return values_.at(key).get<std::string>(); }

enc::EncoderConfig RunConfig::encoder(std::size_t vocab_size) const {
  enc::EncoderConfig c;
  c.num_layers = values_.at("num_layers").get<std::size_t>();
  c.num_heads = values_.at("num_heads").get<std::size_t>();
  c.hidden_size = values_.at("hidden_size").get<std::size_t>();
  c.ff_size = values_.at("ff_size").get<std::size_t>();
  c.max_positions = values_.at("max_positions").get<std::size_t>();
  c.dropout_rate = values_.at("dropout").get<double>();
  c.layer_norm_eps = values_.at("layer_norm_eps").get<double>();
  c.scale_mode = enc::parse_scale_mode(str("scale_mode"));
  c.mask_mode = num::parse_mask_mode(str("mask_mode"));
  c.vocab_size = vocab_size;
  c.validate();
  if (c.max_positions < values_.at("max_seq_len").get<std::size_t>()) {
    throw UsageError("max_seq_len exceeds max_positions");
  }
  return c;
}

std::pair<std::string, std::size_t> parse_layers(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("--layers expects POS:T, got '" + text + "'");
  const std::string pos = text.substr(0, colon);
  const std::string num = text.substr(colon + 1);
  std::size_t t = 0;
  const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), t);
  if (ec != std::errc() || ptr != num.data() + num.size() || t == 0) {
    throw UsageError("--layers expects a positive layer count, got '" + num + "'");
  }
  if (pos != "first" && pos != "middle" && pos != "last" && pos != "outer") {
    throw UsageError("--layers position must be first, middle, last or outer, got '" + pos + "'");
  }
  return {pos, t};
}

enc::MaskPlan RunConfig::plan() const {
  const auto kind = enc::parse_plan_kind(str("plan"));
  const auto layers = str("layers");
  const auto num_layers = values_.at("num_layers").get<std::size_t>();
  enc::MaskPlan p;
  switch (kind) {
    case enc::PlanKind::none:
      break;
    case enc::PlanKind::inside: {
      const auto [pos, t] = parse_layers(layers.empty() ? "last:1" : layers);
      if (pos == "outer") throw UsageError("plan inside takes first/middle/last in --layers");
      p = enc::MaskPlan::inside(enc::parse_layer_position(pos), t, num_layers);
      break;
    }
    case enc::PlanKind::outside: {
      const auto [pos, t] = parse_layers(layers.empty() ? "outer:2" : layers);
      if (pos != "outer") throw UsageError("plan outside takes outer:T in --layers");
      p = enc::MaskPlan::outside(t);
      break;
    }
  }
  p.validate(num_layers);
  return p;
}

train::Hyperparams RunConfig::hyper() const {
  train::Hyperparams h;
  h.base_lr = values_.at("lr").get<double>();
  h.batch_size = values_.at("batch_size").get<std::size_t>();
  h.warmup_frac = values_.at("warmup_frac").get<double>();
  h.max_epochs = values_.at("epochs").get<std::size_t>();
  h.dropout = values_.at("dropout").get<double>();
  h.seed = seed();
  h.max_seq_len = values_.at("max_seq_len").get<std::size_t>();
  h.weight_decay = values_.at("weight_decay").get<double>();
  h.validate();
  return h;
}

std::uint64_t RunConfig::seed() const { return values_.at("seed").get<std::uint64_t>(); }

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    double v = 0.0;
    const auto* first = item.data();
    const auto* last = item.data() + item.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && last[-1] == ' ') --last;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last) {
      throw UsageError("malformed fraction '" + item + "'");
    }
    if (!(v >= 0.0 && v <= 1.0)) throw UsageError("fraction " + item + " outside [0, 1]");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("no fractions given");
  return out;
}

std::vector<double> RunConfig::fractions() const { return parse_fractions(str("fractions")); }

fs::path RunConfig::out_dir() const { return fs::path(str("out")); }

std::string RunConfig::digest() const { return digest_hex(values_.dump()); }

namespace {

struct Options {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> plan, mask_mode, scale_mode, layers, out;
  std::optional<std::string> vocab, corpus, parses, eval_corpus, eval_parses, checkpoint;
  std::optional<std::size_t> epochs;
  std::optional<std::string> fractions;
  std::string id;
  std::string text_a, text_b;
  std::string overlap_a, overlap_b;
};

RunConfig resolve(const Options& o, const json* base = nullptr) {
  RunConfig cfg;
  if (base) cfg.merge(*base);
  if (o.config_path) {
    json j;
    try {
      j = json::parse(read_text(*o.config_path));
    } catch (const json::exception& e) {
      throw UsageError("config " + *o.config_path + ": " + e.what());
    }
    cfg.merge(j);
  }
  if (o.seed) cfg.set("seed", *o.seed);
  const std::pair<const char*, const std::optional<std::string>*> strings[] = {
      {"plan", &o.plan},       {"mask_mode", &o.mask_mode},     {"scale_mode", &o.scale_mode},
      {"layers", &o.layers},   {"out", &o.out},                 {"vocab", &o.vocab},
      {"corpus", &o.corpus},   {"parses", &o.parses},           {"eval_corpus", &o.eval_corpus},
      {"eval_parses", &o.eval_parses}, {"checkpoint", &o.checkpoint}, {"fractions", &o.fractions}};
  for (const auto& [key, value] : strings) {
    if (*value) cfg.set(key, **value);
  }
  if (o.epochs) cfg.set("epochs", *o.epochs);
  return cfg;
}

fs::path require_path(const RunConfig& cfg, const std::string& key) {
  const auto p = cfg.str(key);
  if (p.empty()) throw UsageError("config key '" + key + "' is required for this command");
  if (!fs::exists(p)) throw UsageError(key + " path does not exist: " + p);
  return p;
}

fs::path checkpoint_path(const RunConfig& cfg) {
  const auto p = cfg.str("checkpoint");
  return p.empty() ? cfg.out_dir() / "checkpoint.wmk" : fs::path(p);
}

std::string corpus_digest(const std::vector<schema::Schema>& corpus) {
  return digest_hex(schema::to_jsonl(corpus));
}

void warn_leading_pronouns(const std::vector<schema::Schema>& corpus, std::ostream& err) {
  for (const auto& s : corpus) {
    if (s.pronoun_begin == 0) err << "warning: schema '" << s.id << "' has its pronoun first; segment A is empty\n";
  }
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve(o);
  const auto vocab_path = require_path(cfg, "vocab");
  const auto corpus_path = require_path(cfg, "corpus");
  const auto parses_path = require_path(cfg, "parses");
  const auto vocab = tok::Vocab::load(vocab_path);
  const auto encoder = cfg.encoder(vocab.size());
  const auto plan = cfg.plan();
  const auto hyper = cfg.hyper();
  const auto corpus = schema::load_schemas(corpus_path);
  warn_leading_pronouns(corpus, err);
  const auto parses = schema::load_parse_index(parses_path);

  out << "config " << cfg.digest() << " " << cfg.values().dump() << "\n";

  const auto examples = train::make_training_examples(corpus, vocab, parses, hyper.max_seq_len);
  auto params = enc::init_params(encoder, plan.kind, num::derive_seed(cfg.seed(), "init"));

  const fs::path dir = cfg.out_dir();
  fs::create_directories(dir);
  std::ofstream log(dir / "train_log.jsonl", std::ios::binary | std::ios::trunc);
  if (!log) throw FormatError("cannot write " + (dir / "train_log.jsonl").string());
  const auto result = train::fine_tune(params, examples, hyper, encoder, plan, [&](const train::EpochLog& e) {
    log << e.to_json().dump() << "\n";
    log.flush();
  });

  train::Checkpoint ckpt;
  ckpt.config = encoder;
  ckpt.plan = plan;
  ckpt.params = params;
  ckpt.meta.step = result.steps;
  ckpt.meta.seed = cfg.seed();
  ckpt.meta.corpus_digest = corpus_digest(corpus);
  ckpt.meta.extra = {{"config", cfg.values()}, {"config_digest", cfg.digest()}};
  const auto path = checkpoint_path(cfg);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  train::save_checkpoint(ckpt, path);
  write_text(dir / "config.json", cfg.values().dump(2) + "\n");

  const auto& last = result.log.back();
  out << "trained " << examples.size() << " examples for " << last.epoch << " epochs (" << result.steps
      << " steps); final loss " << last.loss << ", training accuracy " << last.train_accuracy << "\n";
  out << "checkpoint " << path.string() << "\n";
  return 0;
}

/// Checkpoint plus the run config it was trained with, overlaid by the
/// current config file and flags.
struct LoadedRun {
  RunConfig cfg;
  train::Checkpoint ckpt;
  std::string checkpoint_digest;
};

LoadedRun load_run(const Options& o) {
  const RunConfig first = resolve(o);
  const auto path = checkpoint_path(first);
  if (!fs::exists(path)) throw UsageError("checkpoint does not exist: " + path.string());
  const auto bytes = train::read_file_bytes(path);
  LoadedRun r;
  r.ckpt = train::decode_checkpoint(bytes);
  r.checkpoint_digest = digest_hex(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  const json* base = nullptr;
  if (r.ckpt.meta.extra.contains("config")) base = &r.ckpt.meta.extra.at("config");
  r.cfg = resolve(o, base);
  return r;
}

/// Params of the checkpoint, checked tensor by tensor against the resolved
/// config's architecture.
schema::ModelBundle bundle_for(const LoadedRun& run) {
  schema::ModelBundle b;
  b.vocab = tok::Vocab::load(require_path(run.cfg, "vocab"));
  b.config = run.cfg.encoder(b.vocab.size());
  b.plan = run.cfg.plan();
  b.max_seq_len = run.cfg.values().at("max_seq_len").get<std::size_t>();
  const auto expected = enc::param_shapes(b.config, b.plan.kind);
  const auto have = run.ckpt.params.named();
  std::map<std::string, num::Shape> have_dims;
  for (const auto& [name, var] : have) have_dims.emplace(name, var.dims());
  for (const auto& [name, dims] : expected) {
    const auto it = have_dims.find(name);
    if (it == have_dims.end()) throw FormatError("checkpoint has no tensor '" + name + "'");
    if (it->second != dims) {
      throw FormatError("checkpoint tensor '" + name + "' has dims " + num::shape_str(it->second) +
                        ", config expects " + num::shape_str(dims));
    }
    have_dims.erase(it);
  }
  if (!have_dims.empty()) {
    throw FormatError("checkpoint tensor '" + have_dims.begin()->first + "' is not used by the configured model");
  }
  b.params = run.ckpt.params;
  return b;
}

std::pair<fs::path, fs::path> eval_inputs(const RunConfig& cfg) {
  const bool separate = !cfg.str("eval_corpus").empty();
  return {require_path(cfg, separate ? "eval_corpus" : "corpus"),
          require_path(cfg, separate && !cfg.str("eval_parses").empty() ? "eval_parses" : "parses")};
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  const LoadedRun run = load_run(o);
  const auto model = bundle_for(run);
  const auto [corpus_path, parses_path] = eval_inputs(run.cfg);
  const auto corpus = schema::load_schemas(corpus_path);
  warn_leading_pronouns(corpus, err);
  const auto parses = schema::load_parse_index(parses_path);
  const auto report = eval::evaluate(model, corpus, parses, run.cfg.digest(), run.checkpoint_digest);

  json doc = report.to_json();
  doc["config"] = run.cfg.values();
  const fs::path dir = run.cfg.out_dir();
  write_text(dir / "report.json", doc.dump(2) + "\n");
  const std::string table = report.to_table(run.cfg.str("plan") == "none" ? "encoder" : "encoder+" + model.plan.describe());
  write_text(dir / "report.txt", table);
  out << table;
  return 0;
}

int cmd_mask(const Options& o, std::ostream& out, std::ostream&) {
  const RunConfig cfg = resolve(o);
  if (o.id.empty()) throw UsageError("mask needs --id SCHEMA_ID[/CANDIDATE]");
  const auto vocab = tok::Vocab::load(require_path(cfg, "vocab"));
  const auto corpus = schema::load_schemas(require_path(cfg, "corpus"));
  const auto parses = schema::load_parse_index(require_path(cfg, "parses"));
  const auto max_len = cfg.values().at("max_seq_len").get<std::size_t>();

  std::string id = o.id;
  std::optional<std::size_t> only;
  if (const auto slash = id.find('/'); slash != std::string::npos) {
    const std::string k = id.substr(slash + 1);
    if (k != "0" && k != "1") throw UsageError("candidate index must be 0 or 1, got '" + k + "'");
    only = static_cast<std::size_t>(k[0] - '0');
    id.resize(slash);
  }
  const schema::Schema* found = nullptr;
  for (const auto& s : corpus) {
    if (s.id == id) found = &s;
  }
  if (!found) throw UsageError("unknown schema id '" + id + "'");
  const auto pair = schema::generate_candidates(*found);
  for (std::size_t k = 0; k < 2; ++k) {
    if (only && *only != k) continue;
    const auto key = schema::parse_key(id, k);
    const auto it = parses.find(key);
    if (it == parses.end()) throw AlignmentError("no parse for " + key);
    const auto prepared = schema::prepare_candidate(pair.members[k], id, &it->second, vocab, max_len);
    out << "# " << key << " word-level\n"
        << dep::render_mask(dep::build_word_mask(it->second), it->second.words) << "# " << key
        << " token-level\n"
        << dep::render_mask(*prepared.mask, prepared.encoding.pieces);
  }
  return 0;
}

int cmd_curve(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve(o);
  const auto fractions = cfg.fractions();
  schema::ModelBundle model;
  model.vocab = tok::Vocab::load(require_path(cfg, "vocab"));
  model.config = cfg.encoder(model.vocab.size());
  model.plan = cfg.plan();
  model.max_seq_len = cfg.values().at("max_seq_len").get<std::size_t>();
  const auto hyper = cfg.hyper();
  const auto train_corpus = schema::load_schemas(require_path(cfg, "corpus"));
  warn_leading_pronouns(train_corpus, err);
  const auto train_parses = schema::load_parse_index(require_path(cfg, "parses"));
  const auto [eval_corpus_path, eval_parses_path] = eval_inputs(cfg);
  const auto eval_corpus = schema::load_schemas(eval_corpus_path);
  const auto eval_parses = schema::load_parse_index(eval_parses_path);
  model.params = enc::init_params(model.config, model.plan.kind, num::derive_seed(cfg.seed(), "init"));

  const auto rows = eval::size_curve(model, train_corpus, train_parses, eval_corpus, eval_parses, fractions,
                                     cfg.seed(), hyper, cfg.digest());
  const std::string table = eval::curve_table(rows);
  const fs::path dir = cfg.out_dir();
  write_text(dir / "curve.txt", table);
  write_text(dir / "curve.json", json({{"config", cfg.values()}, {"config_digest", cfg.digest()},
                                       {"rows", eval::curve_json(rows)}}).dump(2) + "\n");
  out << table;
  return 0;
}

int cmd_tokenize(const Options& o, std::ostream& out, std::ostream&) {
  const RunConfig cfg = resolve(o);
  const auto vocab = tok::Vocab::load(require_path(cfg, "vocab"));
  if (o.text_b.empty()) {
    for (const auto& w : tok::word_tokenize(o.text_a)) {
      out << w.text << "\t";
      const auto pieces = tok::wordpiece(w.text, vocab);
      for (std::size_t i = 0; i < pieces.size(); ++i) out << (i ? " " : "") << pieces[i];
      out << "\n";
    }
    return 0;
  }
  const auto enc = tok::encode_pair(tok::word_strings(o.text_a), tok::word_strings(o.text_b), vocab,
                                    cfg.values().at("max_seq_len").get<std::size_t>());
  for (std::size_t p = 0; p < enc.size(); ++p) {
    out << p << "\t" << enc.pieces[p] << "\t" << enc.token_ids[p] << "\t" << static_cast<int>(enc.segment_ids[p]) << "\t";
    if (enc.alignment[p] == tok::kSpecialPosition) {
      out << "-";
    } else {
      out << enc.alignment[p];
    }
    out << "\n";
  }
  return 0;
}

int cmd_overlap(const Options& o, std::ostream& out, std::ostream&) {
  const auto a = schema::load_schemas(o.overlap_a);
  const auto b = schema::load_schemas(o.overlap_b);
  const auto overlaps = schema::find_overlaps(a, b);
  for (const auto& ov : overlaps) out << ov.id_a << "\t" << ov.id_b << "\n";
  out << overlaps.size() << " overlapping schema(s)\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dependency-masked encoder for Winograd schema resolution", "depwsc"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "flat JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--plan", o.plan, "mask plan: none, inside, outside");
    sub->add_option("--mask-mode", o.mask_mode, "additive or multiplicative");
    sub->add_option("--scale-mode", o.scale_mode, "sqrt_dk or dk");
    sub->add_option("--layers", o.layers, "POS:T with POS in first/middle/last, or outer:T");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--vocab", o.vocab, "WordPiece vocabulary file");
    sub->add_option("--corpus", o.corpus, "schema corpus (JSON lines)");
    sub->add_option("--parses", o.parses, "CoNLL-U parse sidecar");
    sub->add_option("--eval-corpus", o.eval_corpus, "evaluation corpus");
    sub->add_option("--eval-parses", o.eval_parses, "evaluation parse sidecar");
    sub->add_option("--checkpoint", o.checkpoint, "checkpoint path");
    sub->add_option("--epochs", o.epochs, "training epochs");
  };

  auto* train = app.add_subcommand("train", "fine-tune on a schema corpus and write a checkpoint");
  common(train);
  auto* evaluate = app.add_subcommand("eval", "evaluate a checkpoint and write reports");
  common(evaluate);
  auto* mask = app.add_subcommand("mask", "print word- and token-level dependency masks");
  common(mask);
  mask->add_option("--id", o.id, "schema id, optionally /candidate")->required();
  auto* curve = app.add_subcommand("curve", "train on growing subsamples and evaluate each");
  common(curve);
  curve->add_option("--fractions", o.fractions, "comma-separated fractions in [0, 1]");
  auto* tokenize = app.add_subcommand("tokenize", "show word and WordPiece tokenization");
  common(tokenize);
  tokenize->add_option("--text", o.text_a, "text (segment A)")->required();
  tokenize->add_option("--text-b", o.text_b, "segment B; prints the pair encoding");
  auto* overlap = app.add_subcommand("overlap-check", "list schemas whose words match across two corpora");
  overlap->add_option("a", o.overlap_a, "first corpus")->required()->check(CLI::ExistingFile);
  overlap->add_option("b", o.overlap_b, "second corpus")->required()->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) return cmd_train(o, out, err);
    if (*evaluate) return cmd_eval(o, out, err);
    if (*mask) return cmd_mask(o, out, err);
    if (*curve) return cmd_curve(o, out, err);
    if (*tokenize) return cmd_tokenize(o, out, err);
    if (*overlap) return cmd_overlap(o, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace depwsc::cli
