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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "depwsc/encoder.hpp"
#include "depwsc/trainer.hpp"

namespace depwsc::cli {

/// Flat run configuration. Every key has a default; config files may only
/// use known keys and every flag overrides one of them.
///
///   architecture  num_layers num_heads hidden_size ff_size max_positions
///                 dropout layer_norm_eps scale_mode mask_mode
///   mask plan     plan (none|inside|outside) layers (POS:T, or outer:T)
///   training      lr batch_size warmup_frac epochs weight_decay max_seq_len seed
///   paths         vocab corpus parses eval_corpus eval_parses checkpoint out
///   curve         fractions (comma-separated list)
class RunConfig {
 public:
  static nlohmann::json defaults();

  RunConfig() : values_(defaults()) {}

  /// Overlays `patch`; unknown keys raise a usage error.
  void merge(const nlohmann::json& patch);
  void set(const std::string& key, nlohmann::json value);

  const nlohmann::json& values() const { return values_; }
  std::string str(const std::string& key) const;

  enc::EncoderConfig encoder(std::size_t vocab_size) const;
  enc::MaskPlan plan() const;
  train::Hyperparams hyper() const;
  std::uint64_t seed() const;
  std::vector<double> fractions() const;
  std::filesystem::path out_dir() const;

  /// Digest of the canonical JSON dump.
  std::string digest() const;

 private:
  nlohmann::json values_;
};

/// Parses "0,0.5,1"; every entry must be a number in [0, 1].
std::vector<double> parse_fractions(const std::string& text);

/// Parses "last:5", "middle:3", "first:1" or "outer:3".
std::pair<std::string, std::size_t> parse_layers(const std::string& text);

/// Runs one command line in-process. Returns the exit code: 0 on success,
/// 1 on a runtime error, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace depwsc::cli
