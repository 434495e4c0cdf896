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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "depwsc/encoder.hpp"

namespace depwsc::train {

inline constexpr char kCheckpointMagic[4] = {'W', 'M', 'K', '1'};
inline constexpr std::uint32_t kCheckpointFormat = 1;

struct TrainingMeta {
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  std::string corpus_digest;
  nlohmann::json extra = nlohmann::json::object();  // resolved run config and the like

  nlohmann::json to_json() const;
  static TrainingMeta from_json(const nlohmann::json& j);
};

struct Checkpoint {
  enc::EncoderConfig config;
  enc::MaskPlan plan;
  TrainingMeta meta;
  enc::ModelParams<float> params;
};

/// Layout, all integers little-endian:
///   "WMK1" | u32 format | u32 length + UTF-8 JSON config | u32 tensor count |
///   per tensor: u16 name length + name + u8 rank + u32 dims + f32 data |
///   u32 CRC32 of every preceding byte.
/// The JSON holds the encoder config, mask plan and training metadata and is
/// written in a canonical key order, so a load/save cycle reproduces the bytes.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);

/// Validates magic, format, lengths, CRC and every tensor's dims against the
/// embedded config. FormatError messages carry the byte offset of the fault.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Names of the tensors stored in a checkpoint file, in file order.
std::vector<std::string> checkpoint_tensor_names(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace depwsc::train
