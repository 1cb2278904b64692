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

// Frozen alignment posteriors ("ALNQ" files).
//
//   "ALNQ" | u32 version = 1 | u64 utterance count
//   per utterance: u16 id length | id bytes | u32 N | u32 T | N*T f32, row-major
//
// All integers and floats are little-endian.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "repkd/lattice.hpp"

namespace repkd {

inline constexpr std::uint32_t kAlnqVersion = 1;
inline constexpr double kAlnqRowTolerance = 1e-4;

class PosteriorSet {
 public:
  void add(std::string id, lattice::AlignmentPosterior q);

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const lattice::AlignmentPosterior& at(std::size_t i) const { return items_[i]; }
  const lattice::AlignmentPosterior* find(const std::string& id) const;

  /// Rounds every probability to f32, the precision stored on disk.
  void round_to_f32();
  void mark_frozen();

  /// FNV-1a over ids, shapes and values.
  std::uint64_t hash() const;

 private:
  std::vector<std::string> ids_;
  std::vector<lattice::AlignmentPosterior> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::vector<std::uint8_t> encode_alnq(const PosteriorSet& set);
void write_alnq(const std::filesystem::path& path, const PosteriorSet& set);

/// Loaded posteriors are marked frozen. Rows must sum to 1 within 1e-4.
PosteriorSet decode_alnq(std::vector<std::uint8_t> bytes, const std::string& what);
PosteriorSet read_alnq(const std::filesystem::path& path);

}  // namespace repkd
