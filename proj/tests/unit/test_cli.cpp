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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "cli.hpp"
#include "depwsc/checkpoint.hpp"
#include "depwsc/error.hpp"
#include "synth.hpp"

using namespace depwsc;
namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path dir;

  explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / ("depwsc_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto corpus = testing::make_corpus({.count = 6, .seed = 2});
    write("corpus.jsonl", schema::to_jsonl(corpus.schemas));
    write("parses.conllu", corpus.conllu);
    std::string vocab;
    for (const auto& p : testing::synth_vocab_pieces()) vocab += p + "\n";
    write("vocab.txt", vocab);
    write("config.json", R"({"num_layers": 1, "hidden_size": 8, "ff_size": 16, "epochs": 2, "batch_size": 4,)"
                         R"( "max_seq_len": 32, "max_positions": 32})");
  }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name, std::ios::binary) << text;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(dir / name, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::vector<std::string> args(const std::string& command, std::vector<std::string> extra = {}) const {
    std::vector<std::string> a = {command,      "--config", (dir / "config.json").string(),
                                  "--vocab",    (dir / "vocab.txt").string(),
                                  "--corpus",   (dir / "corpus.jsonl").string(),
                                  "--parses",   (dir / "parses.conllu").string(),
                                  "--out",      dir.string()};
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  }
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("train then eval writes checkpoint, log and reports") {
  const Workspace ws("train_eval");
  const auto t = run(ws.args("train", {"--plan", "inside", "--layers", "last:1", "--seed", "3"}));
  INFO(t.err);
  REQUIRE(t.code == 0);
  CHECK(t.out.rfind("config ", 0) == 0);
  CHECK(fs::exists(ws.dir / "checkpoint.wmk"));
  CHECK(fs::exists(ws.dir / "config.json"));
  const auto log = ws.read("train_log.jsonl");
  CHECK(std::count(log.begin(), log.end(), '\n') == 2);
  const auto ck = train::load_checkpoint(ws.dir / "checkpoint.wmk");
  CHECK(ck.plan == enc::MaskPlan::inside({0}));
  CHECK(ck.meta.seed == 3);

  const auto e = run(ws.args("eval"));
  INFO(e.err);
  REQUIRE(e.code == 0);
  CHECK(e.out.find("Consistent") != std::string::npos);
  const auto report = nlohmann::json::parse(ws.read("report.json"));
  CHECK(report["full"]["total"] == 6);
  CHECK(report["config"]["plan"] == "inside");
  CHECK(report["checkpoint_digest"].get<std::string>().size() == 16);
  CHECK(fs::exists(ws.dir / "report.txt"));
}

TEST_CASE("a rerun with the same seed reproduces the checkpoint byte for byte") {
  const Workspace ws("rerun");
  REQUIRE(run(ws.args("train", {"--plan", "outside", "--layers", "outer:2"})).code == 0);
  const auto first = train::read_file_bytes(ws.dir / "checkpoint.wmk");
  const auto first_log = ws.read("train_log.jsonl");
  REQUIRE(run(ws.args("train", {"--plan", "outside", "--layers", "outer:2"})).code == 0);
  CHECK(train::read_file_bytes(ws.dir / "checkpoint.wmk") == first);
  CHECK(ws.read("train_log.jsonl") == first_log);
  REQUIRE(run(ws.args("train", {"--plan", "outside", "--layers", "outer:2", "--seed", "1"})).code == 0);
  CHECK_FALSE(train::read_file_bytes(ws.dir / "checkpoint.wmk") == first);
}

TEST_CASE("eval rejects a checkpoint that does not fit the configured architecture") {
  const Workspace ws("mismatch");
  REQUIRE(run(ws.args("train")).code == 0);
  const auto e = run(ws.args("eval", {"--plan", "outside"}));
  CHECK(e.code == 1);
  CHECK(e.err.find("outer.") != std::string::npos);
}

TEST_CASE("a missing parse names the schema and exits with 1") {
  const Workspace ws("missing_parse");
  const auto corpus = testing::make_corpus({.count = 6, .seed = 2});
  auto parses = corpus.parses;
  const auto id = corpus.schemas[3].id;
  parses.erase(schema::parse_key(id, 0));
  std::string conllu;
  for (const auto& [key, p] : parses) conllu += dep::to_conllu(p);
  ws.write("parses.conllu", conllu);
  const auto r = run(ws.args("train"));
  CHECK(r.code == 1);
  CHECK(r.err.find(id) != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  const Workspace ws("usage");
  CHECK(run(ws.args("curve", {"--fractions", "0,1.5"})).code == 2);
  CHECK(run(ws.args("curve", {"--fractions", "0,x"})).code == 2);
  CHECK(run({"train", "--no-such-flag"}).code == 2);
  CHECK(run({}).code == 2);
  ws.write("bad.json", R"({"hidden_sise": 8})");
  const auto r = run({"train", "--config", (ws.dir / "bad.json").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("hidden_sise") != std::string::npos);
  CHECK(run(ws.args("train", {"--layers", "centre:2", "--plan", "inside"})).code == 2);
}

TEST_CASE("mask prints word- and token-level grids") {
  const Workspace ws("mask");
  const auto corpus = testing::make_corpus({.count = 6, .seed = 2});
  const auto r = run(ws.args("mask", {"--id", corpus.schemas[0].id + "/1"}));
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("/1 word-level") != std::string::npos);
  CHECK(r.out.find("/1 token-level") != std::string::npos);
  CHECK(r.out.find("/0 ") == std::string::npos);
  CHECK(r.out.find("[CLS]") != std::string::npos);
  CHECK(run(ws.args("mask", {"--id", "nope"})).code == 2);
}

TEST_CASE("tokenize shows pieces and the pair layout") {
  const Workspace ws("tokenize");
  const auto single = run(ws.args("tokenize", {"--text", "The elephant"}));
  REQUIRE(single.code == 0);
  CHECK(single.out == "the\tthe\nelephant\tele ##phant\n");
  const auto pair = run(ws.args("tokenize", {"--text", "the mouse", "--text-b", "it was small ."}));
  REQUIRE(pair.code == 0);
  CHECK(pair.out.rfind("0\t[CLS]\t", 0) == 0);
  CHECK(pair.out.find("\t[SEP]\t") != std::string::npos);
  CHECK(pair.out.find("\tit\t") != std::string::npos);
}

TEST_CASE("curve writes one row per fraction") {
  const Workspace ws("curve");
  const auto r = run(ws.args("curve", {"--fractions", "0,0.5,1"}));
  INFO(r.err);
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(ws.read("curve.json"));
  CHECK(doc["rows"].size() == 3);
  CHECK(fs::exists(ws.dir / "curve.txt"));
}

TEST_CASE("overlap-check lists shared schemas") {
  const Workspace ws("overlap");
  const auto r = run({"overlap-check", (ws.dir / "corpus.jsonl").string(), (ws.dir / "corpus.jsonl").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("6 overlapping schema(s)") != std::string::npos);
}

TEST_CASE("run config helpers") {
  CHECK(cli::parse_fractions("0,0.25,1") == std::vector<double>{0.0, 0.25, 1.0});
  CHECK_THROWS(cli::parse_fractions("1.5"));
  CHECK_THROWS(cli::parse_fractions(""));
  CHECK(cli::parse_layers("middle:5") == std::pair<std::string, std::size_t>{"middle", 5});
  CHECK(cli::parse_layers("outer:3") == std::pair<std::string, std::size_t>{"outer", 3});
  CHECK_THROWS(cli::parse_layers("last"));
  cli::RunConfig cfg;
  const auto d = cfg.digest();
  cfg.set("seed", 4);
  CHECK(cfg.digest() != d);
  CHECK(cfg.seed() == 4);
  CHECK_THROWS(cfg.set("seed", "four"));
  cfg.set("plan", "outside");
  CHECK(cfg.plan() == enc::MaskPlan::outside(2));
  cfg.set("plan", "inside");
  cfg.set("layers", "first:2");
  CHECK(cfg.plan() == enc::MaskPlan::inside({0, 1}));
}
