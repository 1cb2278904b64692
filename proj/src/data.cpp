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

#include "repkd/data.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include "repkd/binio.hpp"
#include "repkd/errors.hpp"
#include "repkd/random.hpp"

namespace repkd::data {

namespace fs = std::filesystem;

Vocabulary::Vocabulary(std::vector<std::string> pieces) : pieces_(std::move(pieces)) {}

Vocabulary Vocabulary::plain(std::size_t size) {
  std::vector<std::string> pieces;
  for (std::size_t i = 0; i < size; ++i) pieces.push_back("t" + std::to_string(i));
  return Vocabulary(std::move(pieces));
}

const std::string& Vocabulary::piece(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size()) {
    throw InvalidInput("token id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(pieces_.size()));
  }
  return pieces_[static_cast<std::size_t>(id)];
}

bool Vocabulary::is_continuation(int id) const { return piece(id).rfind("##", 0) == 0; }

std::vector<std::string> Vocabulary::detokenize(const std::vector<int>& tokens) const {
  std::vector<std::string> words;
  for (int tok : tokens) {
    const std::string& p = piece(tok);
    if (is_continuation(tok) && !words.empty()) {
      words.back() += p.substr(2);
    } else if (is_continuation(tok)) {
      words.push_back(p.substr(2));
    } else {
      words.push_back(p);
    }
  }
  return words;
}

Vocabulary Vocabulary::read(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open vocabulary " + path.string());
  std::vector<std::string> pieces;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw FormatError(path.string() + ": empty vocabulary entry");
    pieces.push_back(line);
  }
  return Vocabulary(std::move(pieces));
}

void Vocabulary::write(const fs::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw MissingArtifact("cannot write vocabulary " + path.string());
  for (const auto& p : pieces_) out << p << '\n';
}

// --- frames ------------------------------------------------------------------

std::vector<std::uint8_t> encode_frames(const Tensor<float>& frames) {
  binio::Writer w;
  w.magic("FRMS");
  w.u32(static_cast<std::uint32_t>(frames.rows()));
  w.u32(static_cast<std::uint32_t>(frames.rank() == 2 ? frames.cols() : 0));
  w.f32s(frames.flat());
  return w.bytes();
}

Tensor<float> decode_frames(std::vector<std::uint8_t> bytes, const std::string& what) {
  binio::Reader r(std::move(bytes), what);
  r.expect_magic("FRMS");
  const std::size_t rows = r.u32(), cols = r.u32();
  if (rows * cols > r.remaining() / sizeof(float)) {
    throw FormatError(what + ": truncated frame data (" + std::to_string(rows) + "x" +
                      std::to_string(cols) + ")");
  }
  Tensor<float> out = Tensor<float>::matrix(rows, cols);
  r.f32s(out.flat());
  if (!r.at_end()) throw FormatError(what + ": trailing bytes after frame data");
  return out;
}

void write_frames(const fs::path& path, const Tensor<float>& frames) {
  binio::write_file(path, encode_frames(frames));
}

Tensor<float> read_frames(const fs::path& path) {
  return decode_frames(binio::read_file(path), path.string());
}

// --- manifest ------------------------------------------------------------------

std::string format_manifest_line(const Utterance& u) {
  std::ostringstream os;
  os << u.id << '\t';
  for (std::size_t i = 0; i < u.tokens.size(); ++i) os << (i ? " " : "") << u.tokens[i];
  os << '\t' << u.frames_file << '\t' << u.prev_id.value_or("-") << '\t'
     << u.next_id.value_or("-");
  return os.str();
}

void write_manifest(const fs::path& path, const std::vector<Utterance>& utts) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw MissingArtifact("cannot write manifest " + path.string());
  for (const auto& u : utts) out << format_manifest_line(u) << '\n';
}

namespace {
std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}
}  // namespace

std::vector<Utterance> read_manifest(const fs::path& path, bool load_frames) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open manifest " + path.string());
  std::vector<Utterance> utts;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (fields.size() != 5) {
      throw FormatError(where + ": expected 5 tab-separated fields, found " +
                        std::to_string(fields.size()));
    }
    Utterance u;
    u.id = fields[0];
    if (u.id.empty()) throw FormatError(where + ": empty utterance id");
    if (!seen.insert(u.id).second) throw FormatError(where + ": duplicate utterance id " + u.id);
    std::istringstream toks(fields[1]);
    std::string tok;
    while (toks >> tok) {
      try {
        std::size_t used = 0;
        const int v = std::stoi(tok, &used);
        if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
        u.tokens.push_back(v);
      } catch (const std::exception&) {
        throw FormatError(where + ": bad token id '" + tok + "'");
      }
    }
    u.frames_file = fields[2];
    if (fields[3] != "-") u.prev_id = fields[3];
    if (fields[4] != "-") u.next_id = fields[4];
    if (load_frames) u.frames = read_frames(path.parent_path() / u.frames_file);
    utts.push_back(std::move(u));
  }
  return utts;
}

// --- synthetic corpus -------------------------------------------------------------

void SynthSpec::validate() const {
  if (vocab_size < 2) throw InvalidConfig("synthetic vocabulary needs at least 2 tokens");
  if (!(noise >= 0.0)) throw InvalidConfig("noise scale must be non-negative");
  if (min_tokens < 1 || min_tokens > max_tokens) throw InvalidConfig("bad token length range");
  if (min_frames < 1 || min_frames > max_frames) throw InvalidConfig("bad frames-per-token range");
  if (input_dim == 0) throw InvalidConfig("input dimension must be positive");
  if (train_utterances + dev_utterances == 0) throw InvalidConfig("corpus would be empty");
  if (conversation_length == 0) throw InvalidConfig("conversation length must be positive");
  if (!(continuation_fraction >= 0.0 && continuation_fraction < 1.0)) {
    throw InvalidConfig("continuation fraction must be in [0, 1)");
  }
}

namespace {

struct Bigram {
  std::vector<std::vector<int>> successors;
  std::vector<int> word_starts;  // tokens allowed at position 0
};

constexpr double kSuccessorWeights[] = {0.45, 0.25, 0.15};
constexpr double kUniformShare = 0.15;

int draw_token(const Bigram& lm, int prev, std::size_t vocab, rng::Generator& gen) {
  const double u = gen.uniform();
  if (prev >= 0) {
    double acc = 0.0;
    const auto& succ = lm.successors[static_cast<std::size_t>(prev)];
    for (std::size_t k = 0; k < succ.size(); ++k) {
      acc += kSuccessorWeights[k];
      if (u < acc) return succ[k];
    }
    return static_cast<int>(gen.index(vocab));
  }
  return lm.word_starts[gen.index(lm.word_starts.size())];
}

std::vector<Utterance> make_split(const std::string& prefix, std::size_t count,
                                  const SynthSpec& spec, const Bigram& lm,
                                  const Tensor<float>& prototypes, rng::Generator& gen) {
  static_assert(kSuccessorWeights[0] + kSuccessorWeights[1] + kSuccessorWeights[2] +
                    kUniformShare > 0.999);
  std::vector<Utterance> utts(count);
  auto id_of = [&](std::size_t i) {
    std::ostringstream os;
    os << prefix << '-' << std::setw(5) << std::setfill('0') << i;
    return os.str();
  };
  for (std::size_t i = 0; i < count; ++i) {
    Utterance& u = utts[i];
    u.id = id_of(i);
    u.frames_file = "frames/" + u.id + ".frms";
    const std::size_t pos = i % spec.conversation_length;
    if (pos > 0) u.prev_id = id_of(i - 1);
    if (pos + 1 < spec.conversation_length && i + 1 < count) u.next_id = id_of(i + 1);

    const std::size_t n =
        spec.min_tokens + gen.index(spec.max_tokens - spec.min_tokens + 1);
    int prev = -1;
    for (std::size_t k = 0; k < n; ++k) {
      prev = draw_token(lm, k == 0 ? -1 : prev, spec.vocab_size, gen);
      u.tokens.push_back(prev);
    }
    std::vector<std::size_t> reps;
    std::size_t total = 0;
    for (std::size_t k = 0; k < n; ++k) {
      reps.push_back(spec.min_frames + gen.index(spec.max_frames - spec.min_frames + 1));
      total += reps.back();
    }
    u.frames = Tensor<float>::matrix(total, spec.input_dim);
    std::size_t row = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto proto = prototypes.row(static_cast<std::size_t>(u.tokens[k]));
      for (std::size_t r = 0; r < reps[k]; ++r, ++row) {
        for (std::size_t d = 0; d < spec.input_dim; ++d) {
          double v = proto[d];
          if (spec.noise > 0.0) v += spec.noise * gen.normal();
          u.frames(row, d) = static_cast<float>(v);
        }
      }
    }
  }
  return utts;
}

}  // namespace

SynthCorpus generate_synth_corpus(const SynthSpec& spec) {
  spec.validate();
  rng::Generator gen(rng::derive(spec.seed, rng::Stream::kSynth));
  const std::size_t V = spec.vocab_size;
  const auto n_cont = static_cast<std::size_t>(spec.continuation_fraction * static_cast<double>(V));
  const std::size_t n_words = V - n_cont;

  SynthCorpus corpus;
  std::vector<std::string> pieces;
  for (std::size_t i = 0; i < n_words; ++i) pieces.push_back("w" + std::to_string(i));
  for (std::size_t i = 0; i < n_cont; ++i) pieces.push_back("##x" + std::to_string(i));
  corpus.vocab = Vocabulary(std::move(pieces));

  corpus.prototypes = Tensor<float>::matrix(V, spec.input_dim);
  for (std::size_t i = 0; i < corpus.prototypes.size(); ++i) {
    corpus.prototypes[i] = static_cast<float>(gen.normal());
  }

  Bigram lm;
  lm.successors.resize(V);
  for (std::size_t a = 0; a < V; ++a) {
    auto& succ = lm.successors[a];
    while (succ.size() < std::min(std::size(kSuccessorWeights), V)) {
      const int b = static_cast<int>(gen.index(V));
      if (std::find(succ.begin(), succ.end(), b) == succ.end()) succ.push_back(b);
    }
  }
  for (std::size_t i = 0; i < n_words; ++i) lm.word_starts.push_back(static_cast<int>(i));

  corpus.train = make_split("train", spec.train_utterances, spec, lm, corpus.prototypes, gen);
  corpus.dev = make_split("dev", spec.dev_utterances, spec, lm, corpus.prototypes, gen);
  return corpus;
}

void write_corpus(const fs::path& dir, const SynthCorpus& corpus) {
  fs::create_directories(dir / "frames");
  corpus.vocab.write(dir / "vocab.txt");
  for (const auto* split : {&corpus.train, &corpus.dev}) {
    for (const auto& u : *split) write_frames(dir / u.frames_file, u.frames);
  }
  write_manifest(dir / "train.tsv", corpus.train);
  write_manifest(dir / "dev.tsv", corpus.dev);
}

std::uint64_t corpus_hash(const std::vector<Utterance>& utts) {
  std::uint64_t h = rng::fnv1a("corpus");
  for (const auto& u : utts) {
    h = rng::fnv1a(format_manifest_line(u), h);
    h = rng::fnv1a_bytes(u.frames.data(), u.frames.size() * sizeof(float), h);
  }
  return h;
}

}  // namespace repkd::data
