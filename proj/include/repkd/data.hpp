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

// Corpora on disk.
//
// Manifest: one utterance per line,
//   id <TAB> token ids (space separated) <TAB> frames file <TAB> prev id <TAB> next id
// with "-" for an absent neighbour. Frames files are resolved relative to the
// manifest's directory.
//
// Frames file: "FRMS" | u32 T_raw | u32 D_in | T_raw * D_in f32, row-major.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "repkd/tensor.hpp"

namespace repkd::data {

struct Utterance {
  std::string id;
  std::vector<int> tokens;
  Tensor<float> frames;  // T_raw x D_in; empty when loaded without frames
  std::string frames_file;
  std::optional<std::string> prev_id;
  std::optional<std::string> next_id;
};

/// Wordpiece-style vocabulary. Entries starting with "##" continue the
/// preceding word.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> pieces);
  /// "t0", "t1", ... with no continuation pieces.
  static Vocabulary plain(std::size_t size);

  std::size_t size() const { return pieces_.size(); }
  const std::string& piece(int id) const;
  bool is_continuation(int id) const;

  /// Merges continuation pieces into their predecessor and returns words.
  std::vector<std::string> detokenize(const std::vector<int>& tokens) const;

  static Vocabulary read(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> pieces_;
};

std::vector<std::uint8_t> encode_frames(const Tensor<float>& frames);
Tensor<float> decode_frames(std::vector<std::uint8_t> bytes, const std::string& what);
void write_frames(const std::filesystem::path& path, const Tensor<float>& frames);
Tensor<float> read_frames(const std::filesystem::path& path);

std::string format_manifest_line(const Utterance& u);
void write_manifest(const std::filesystem::path& path, const std::vector<Utterance>& utts);

/// Parses the manifest; loads each frames file when `load_frames` is set.
std::vector<Utterance> read_manifest(const std::filesystem::path& path, bool load_frames = true);

struct SynthSpec {
  std::size_t vocab_size = 20;
  std::size_t train_utterances = 500;
  std::size_t dev_utterances = 100;
  std::size_t min_tokens = 3;
  std::size_t max_tokens = 8;
  std::size_t min_frames = 2;  // frames rendered per token
  std::size_t max_frames = 4;
  std::size_t input_dim = 16;
  std::size_t conversation_length = 10;  // utterances chained by prev/next
  double continuation_fraction = 0.25;   // share of the vocabulary that is "##" pieces
  double noise = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthCorpus {
  Vocabulary vocab;
  Tensor<float> prototypes;  // |V| x D_in
  std::vector<Utterance> train;
  std::vector<Utterance> dev;
};

/// Token sequences come from a sparse random bigram model; each token renders
/// to r ~ U[min_frames, max_frames] frames of prototype + noise * N(0, 1).
SynthCorpus generate_synth_corpus(const SynthSpec& spec);

/// Writes train.tsv, dev.tsv, vocab.txt and frames/<id>.frms under `dir`.
void write_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus);

/// FNV-1a over manifest lines and frame bytes.
std::uint64_t corpus_hash(const std::vector<Utterance>& utts);

}  // namespace repkd::data
