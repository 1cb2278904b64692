// Copyright 2026 The repkd Authors.
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

// Model checkpoints ("TKDM" files).
//
//   "TKDM" | u32 version = 1 | u64 model-config digest | u32 blob count
//   per blob: u16 name length | name | u8 rank | rank x u32 dims | f32 data
//
// Blobs named "optimizer.*" hold optimizer state and are ignored when a
// plain model is loaded.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "repkd/nn.hpp"

namespace repkd {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedBlob {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<float> data;
};

struct CheckpointFile {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t config_digest = 0;
  std::vector<NamedBlob> blobs;

  const NamedBlob* find(const std::string& name) const;
};

std::vector<std::uint8_t> encode_checkpoint(const CheckpointFile& file);
CheckpointFile decode_checkpoint(std::vector<std::uint8_t> bytes, const std::string& what);
CheckpointFile read_checkpoint_file(const std::filesystem::path& path);
void write_checkpoint_file(const std::filesystem::path& path, const CheckpointFile& file);

template <typename S>
CheckpointFile checkpoint_from_model(const nn::Model<S>& model);

/// Rebuilds a model. Throws ConsistencyError when the stored digest does not
/// match `config`, FormatError when a parameter is missing or misshapen.
template <typename S>
nn::Model<S> model_from_checkpoint(const CheckpointFile& file, const nn::ModelConfig& config);

template <typename S>
void save_model(const std::filesystem::path& path, const nn::Model<S>& model) {
  write_checkpoint_file(path, checkpoint_from_model(model));
}

template <typename S>
nn::Model<S> load_model(const std::filesystem::path& path, const nn::ModelConfig& config) {
  return model_from_checkpoint<S>(read_checkpoint_file(path), config);
}

}  // namespace repkd
