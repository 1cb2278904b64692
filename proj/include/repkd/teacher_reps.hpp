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

// Teacher token representations (TREP files).
//
//   "TREP" | u32 version=1 | teacher id (u16 len + UTF-8) | u32 L | u32 D |
//   u32 M (context variants) | u64 utterance count |
//   per utterance: id (u16 len + UTF-8) | u32 N |
//                  M * L blocks of N x D f32, variant-major then layer 1..L
//
// Files are produced by the Python exporter or by generate_mock_reps.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "repkd/data.hpp"
#include "repkd/tensor.hpp"

namespace repkd::teacher {

inline constexpr std::uint32_t kTrepVersion = 1;

struct UtteranceReps {
  std::string id;
  std::uint32_t tokens = 0;
  std::vector<float> values;  // M * L * N * D
};

class TeacherRepSet {
 public:
  TeacherRepSet() = default;
  TeacherRepSet(std::string teacher_id, std::uint32_t layers, std::uint32_t dim,
                std::uint32_t variants);

  const std::string& teacher_id() const { return teacher_id_; }
  std::uint32_t layers() const { return layers_; }
  std::uint32_t dim() const { return dim_; }
  std::uint32_t variants() const { return variants_; }
  std::size_t size() const { return utts_.size(); }
  const std::vector<UtteranceReps>& utterances() const { return utts_; }

  /// Rejects duplicate ids and payloads of the wrong length.
  void add(UtteranceReps reps);
  const UtteranceReps* find(const std::string& id) const;
  const UtteranceReps& at(const std::string& id) const;

  /// N x D block for a 1-based layer.
  std::span<const float> block(const UtteranceReps& u, std::uint32_t variant,
                               std::uint32_t layer) const;
  Tensor<float> matrix(const std::string& id, std::uint32_t variant, std::uint32_t layer) const;

  /// Every manifest utterance must be present with a matching token count.
  void check_against(const std::vector<data::Utterance>& utts) const;

 private:
  std::string teacher_id_;
  std::uint32_t layers_ = 0, dim_ = 0, variants_ = 0;
  std::vector<UtteranceReps> utts_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::vector<std::uint8_t> encode_trep(const TeacherRepSet& set);
TeacherRepSet decode_trep(std::vector<std::uint8_t> bytes, const std::string& what);
void write_teacher_reps(const std::filesystem::path& path, const TeacherRepSet& set);
TeacherRepSet read_teacher_reps(const std::filesystem::path& path);

/// Deterministic stand-in for a bidirectional text model. Token i at layer l is
///   tanh(g_l * sum_{|o| <= w} c_l(o) * (E[y_{i+o}] * s_o) + b_l)
/// with random token embeddings E, sign patterns s_o (s_0 = 1), a padding
/// embedding outside the utterance and context weights c_l(o) that grow with
/// depth. Variant v > 0 replaces each context contribution (o != 0) by a mask
/// embedding with probability mask_rate.
struct MockTeacherSpec {
  std::string teacher_id = "mock";
  std::uint32_t layers = 12;
  std::uint32_t dim = 768;
  std::uint32_t lookahead = 1;  // w
  std::uint32_t variants = 1;
  double mask_rate = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

TeacherRepSet generate_mock_reps(const std::vector<data::Utterance>& utts,
                                 const MockTeacherSpec& spec);

}  // namespace repkd::teacher
