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

#include "depwsc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include <zlib.h>

#include "depwsc/error.hpp"

namespace depwsc::train {

static_assert(std::numeric_limits<float>::is_iec559, "checkpoints store IEEE-754 binary32");

nlohmann::json TrainingMeta::to_json() const {
  return {{"step", step}, {"seed", seed}, {"corpus_digest", corpus_digest}, {"extra", extra}};
}

TrainingMeta TrainingMeta::from_json(const nlohmann::json& j) {
  TrainingMeta m;
  m.step = j.value("step", std::uint64_t{0});
  m.seed = j.value("seed", std::uint64_t{0});
  m.corpus_digest = j.value("corpus_digest", std::string());
  if (j.contains("extra")) m.extra = j.at("extra");
  return m;
}

namespace {

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, std::numeric_limits<uInt>::max()));
    crc = crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  const std::uint8_t* take(std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) {
      throw FormatError("checkpoint truncated at byte " + std::to_string(pos_) + ": need " +
                        std::to_string(n) + " bytes for " + what + ", " +
                        std::to_string(in_.size() - pos_) + " left");
    }
    const auto* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  template <typename U>
  U uint(const char* what) {
    const auto* p = take(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

nlohmann::json config_document(const Checkpoint& c) {
  return {{"encoder", c.config.to_json()}, {"plan", c.plan.to_json()}, {"meta", c.meta.to_json()}};
}

struct RawTensor {
  std::string name;
  num::Shape dims;
  std::size_t offset = 0;
  std::vector<float> data;
};

struct RawCheckpoint {
  nlohmann::json config;
  std::vector<RawTensor> tensors;
};

RawCheckpoint decode_raw(std::span<const std::uint8_t> bytes, bool with_data) {
  if (bytes.size() < 4) {
    throw FormatError("checkpoint truncated at byte 0: " + std::to_string(bytes.size()) +
                      " bytes is too short for the magic");
  }
  if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError("bad checkpoint magic at byte 0 (expected WMK1)");
  }
  Reader r(bytes);
  r.take(4, "magic");
  const std::size_t format_at = r.pos();
  const auto format = r.uint<std::uint32_t>("format version");
  if (format != kCheckpointFormat) {
    throw FormatError("unsupported checkpoint format " + std::to_string(format) + " at byte " +
                      std::to_string(format_at));
  }
  const auto json_len = r.uint<std::uint32_t>("config length");
  const std::size_t json_at = r.pos();
  const auto* json_ptr = r.take(json_len, "config JSON");
  RawCheckpoint raw;
  try {
    raw.config = nlohmann::json::parse(json_ptr, json_ptr + json_len);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint config JSON at byte " + std::to_string(json_at) + ": " + e.what());
  }
  const auto count = r.uint<std::uint32_t>("tensor count");
  for (std::uint32_t t = 0; t < count; ++t) {
    RawTensor rt;
    rt.offset = r.pos();
    const auto name_len = r.uint<std::uint16_t>("tensor name length");
    const auto* name_ptr = r.take(name_len, "tensor name");
    rt.name.assign(reinterpret_cast<const char*>(name_ptr), name_len);
    const auto rank = r.uint<std::uint8_t>("tensor rank");
    std::size_t size = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      rt.dims.push_back(r.uint<std::uint32_t>("tensor dim"));
      size *= rt.dims.back();
    }
    if (rank == 0 || size == 0) {
      throw FormatError("tensor '" + rt.name + "' at byte " + std::to_string(rt.offset) + " has empty dims");
    }
    if (size > bytes.size() / 4) {
      throw FormatError("checkpoint truncated at byte " + std::to_string(r.pos()) + ": tensor '" +
                        rt.name + "' " + num::shape_str(rt.dims) + " runs past the end");
    }
    const auto* p = r.take(size * 4, "tensor data");
    if (with_data) {
      rt.data.resize(size);
      for (std::size_t i = 0; i < size; ++i) {
        std::uint32_t bits = 0;
        for (std::size_t k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(p[4 * i + k]) << (8 * k);
        rt.data[i] = std::bit_cast<float>(bits);
      }
    }
    raw.tensors.push_back(std::move(rt));
  }
  const std::size_t crc_at = r.pos();
  const auto stored = r.uint<std::uint32_t>("CRC");
  if (r.pos() != bytes.size()) {
    throw FormatError("checkpoint has " + std::to_string(bytes.size() - r.pos()) +
                      " unexpected trailing bytes at byte " + std::to_string(r.pos()));
  }
  const auto computed = crc32_of(bytes.data(), crc_at);
  if (stored != computed) {
    throw FormatError("checkpoint CRC mismatch at byte " + std::to_string(crc_at) + ": stored " +
                      std::to_string(stored) + ", computed " + std::to_string(computed));
  }
  return raw;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  Writer w;
  w.bytes(kCheckpointMagic, 4);
  w.uint<std::uint32_t>(kCheckpointFormat);
  const std::string doc = config_document(c).dump();
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(doc.size()));
  w.bytes(doc.data(), doc.size());
  const auto named = c.params.named();
  const auto expected = enc::param_shapes(c.config, c.plan.kind);
  if (named.size() != expected.size()) {
    throw ContractError("checkpoint params hold " + std::to_string(named.size()) + " tensors, config needs " +
                        std::to_string(expected.size()));
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    const auto& [name, var] = named[i];
    if (name != expected[i].first || !var.defined() || var.dims() != expected[i].second) {
      throw ContractError("checkpoint tensor '" + name + "' does not match the config");
    }
  }
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, var] : named) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) throw FormatError("tensor name too long: " + name);
    w.uint<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    const auto& value = var.value();
    w.uint<std::uint8_t>(static_cast<std::uint8_t>(value.rank()));
    for (const auto d : value.dims()) w.uint<std::uint32_t>(static_cast<std::uint32_t>(d));
    for (const float v : value.values()) w.f32(v);
  }
  const auto crc = crc32_of(w.data().data(), w.data().size());
  w.uint<std::uint32_t>(crc);
  return std::move(w.data());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  RawCheckpoint raw = decode_raw(bytes, true);
  Checkpoint c;
  try {
    c.config = enc::EncoderConfig::from_json(raw.config.at("encoder"));
    c.plan = enc::MaskPlan::from_json(raw.config.at("plan"));
    c.meta = TrainingMeta::from_json(raw.config.at("meta"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
  c.config.validate();
  c.plan.validate(c.config.num_layers);
  std::vector<std::pair<std::string, num::Tensor<float>>> tensors;
  for (auto& t : raw.tensors) {
    tensors.emplace_back(t.name, num::Tensor<float>(t.dims, std::move(t.data)));
  }
  c.params = enc::params_from_tensors(c.config, c.plan.kind, std::move(tensors));
  return c;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path));
}

std::vector<std::string> checkpoint_tensor_names(std::span<const std::uint8_t> bytes) {
  std::vector<std::string> out;
  for (const auto& t : decode_raw(bytes, false).tensors) out.push_back(t.name);
  return out;
}

}  // namespace depwsc::train
