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

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "repkd/binio.hpp"
#include "repkd/data.hpp"
#include "repkd/errors.hpp"
#include "repkd/random.hpp"
#include "repkd/teacher_reps.hpp"
#include "repkd/wer.hpp"

using namespace repkd;

namespace {

data::SynthSpec small_spec() {
  data::SynthSpec s;
  s.train_utterances = 40;
  s.dev_utterances = 10;
  s.input_dim = 4;
  return s;
}

std::vector<std::string> words(const std::string& text) {
  std::vector<std::string> out;
  std::string w;
  for (char c : text) {
    if (c == ' ') {
      if (!w.empty()) out.push_back(w);
      w.clear();
    } else {
      w += c;
    }
  }
  if (!w.empty()) out.push_back(w);
  return out;
}

// Plain memoised recursion over suffixes; shares nothing with wer::align.
std::size_t levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<long>> memo(a.size() + 1, std::vector<long>(b.size() + 1, -1));
  auto go = [&](auto&& self, std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    long& m = memo[i][j];
    if (m >= 0) return static_cast<std::size_t>(m);
    std::size_t best = self(self, i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    best = std::min(best, self(self, i + 1, j) + 1);
    best = std::min(best, self(self, i, j + 1) + 1);
    m = static_cast<long>(best);
    return best;
  };
  return go(go, 0, 0);
}

double cosine(std::span<const float> a, std::span<const float> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += double{a[i]} * b[i];
    aa += double{a[i]} * a[i];
    bb += double{b[i]} * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

data::Utterance utt(const std::string& id, std::vector<int> tokens) {
  data::Utterance u;
  u.id = id;
  u.tokens = std::move(tokens);
  return u;
}

}  // namespace

TEST_CASE("synthetic corpus is deterministic per seed") {
  const auto a = data::generate_synth_corpus(small_spec());
  const auto b = data::generate_synth_corpus(small_spec());
  CHECK(data::corpus_hash(a.train) == data::corpus_hash(b.train));
  CHECK(data::corpus_hash(a.dev) == data::corpus_hash(b.dev));
  auto other = small_spec();
  other.seed = 2;
  CHECK(data::corpus_hash(data::generate_synth_corpus(other).train) !=
        data::corpus_hash(a.train));

  testing::TempDir d1("synth1"), d2("synth2");
  data::write_corpus(d1.path(), a);
  data::write_corpus(d2.path(), b);
  for (const char* f : {"train.tsv", "dev.tsv", "vocab.txt", "frames/train-00003.frms"}) {
    CHECK(binio::read_file(d1 / f) == binio::read_file(d2 / f));
  }
  const auto reread = data::read_manifest(d1 / "train.tsv");
  CHECK(data::corpus_hash(reread) == data::corpus_hash(a.train));
}

TEST_CASE("synthetic corpus shape") {
  const auto spec = small_spec();
  const auto c = data::generate_synth_corpus(spec);
  CHECK(c.train.size() == 40);
  CHECK(c.dev.size() == 10);
  CHECK(c.vocab.size() == 20);
  CHECK(c.train[0].id == "train-00000");
  CHECK(c.dev[9].id == "dev-00009");
  for (const auto& u : c.train) {
    CHECK(u.tokens.size() >= spec.min_tokens);
    CHECK(u.tokens.size() <= spec.max_tokens);
    CHECK(u.frames.rows() >= spec.min_frames * u.tokens.size());
    CHECK(u.frames.rows() <= spec.max_frames * u.tokens.size());
    CHECK(u.frames.cols() == spec.input_dim);
    CHECK_FALSE(c.vocab.is_continuation(u.tokens.front()));
    for (int t : u.tokens) CHECK(static_cast<std::size_t>(t) < spec.vocab_size);
  }
  // Conversations of ten chained utterances.
  CHECK(!c.train[0].prev_id);
  CHECK(*c.train[0].next_id == "train-00001");
  CHECK(*c.train[5].prev_id == "train-00004");
  CHECK(!c.train[9].next_id);
  CHECK(!c.train[10].prev_id);
  CHECK(!c.train.back().next_id);
}

TEST_CASE("noise-free single-frame tokens reproduce the prototypes") {
  auto spec = small_spec();
  spec.noise = 0.0;
  spec.min_frames = spec.max_frames = 1;
  const auto c = data::generate_synth_corpus(spec);
  for (const auto& u : c.train) {
    REQUIRE(u.frames.rows() == u.tokens.size());
    for (std::size_t i = 0; i < u.tokens.size(); ++i) {
      const auto proto = c.prototypes.row(static_cast<std::size_t>(u.tokens[i]));
      for (std::size_t d = 0; d < spec.input_dim; ++d) CHECK(u.frames(i, d) == proto[d]);
    }
  }
}

TEST_CASE("degenerate synth specs are rejected") {
  auto s = small_spec();
  s.vocab_size = 1;
  CHECK_THROWS_AS(data::generate_synth_corpus(s), InvalidConfig);
  s = small_spec();
  s.noise = -1;
  CHECK_THROWS_AS(data::generate_synth_corpus(s), InvalidConfig);
  s = small_spec();
  s.min_tokens = 5;
  s.max_tokens = 4;
  CHECK_THROWS_AS(data::generate_synth_corpus(s), InvalidConfig);
  s = small_spec();
  s.vocab_size = 2;
  s.continuation_fraction = 0;
  CHECK(data::generate_synth_corpus(s).train.size() == 40);
}

TEST_CASE("detokenization merges continuation pieces") {
  const data::Vocabulary v({"the", "cat", "##s", "##y", "sat"});
  CHECK(v.detokenize({0, 1, 2, 4}) == std::vector<std::string>{"the", "cats", "sat"});
  CHECK(v.detokenize({1, 2, 3}) == std::vector<std::string>{"catsy"});
  CHECK(v.detokenize({2, 0}) == std::vector<std::string>{"s", "the"});
  CHECK(v.detokenize({}).empty());
  CHECK_THROWS_AS(v.detokenize({5}), InvalidInput);
  CHECK(data::Vocabulary::plain(3).detokenize({2, 0}) == std::vector<std::string>{"t2", "t0"});

  testing::TempDir dir("vocab");
  v.write(dir / "v.txt");
  const auto back = data::Vocabulary::read(dir / "v.txt");
  CHECK(back.size() == 5);
  CHECK(back.piece(2) == "##s");
}

TEST_CASE("word error rate hand cases") {
  auto rate = [](const std::string& r, const std::string& h) {
    return wer::word_error_rate(wer::align(words(r), words(h)));
  };
  CHECK(rate("a b c", "a b c") == 0.0);
  CHECK(rate("a b c", "a x c") == doctest::Approx(1.0 / 3.0));
  CHECK(rate("a b", "") == 1.0);
  CHECK(rate("a", "a b c d") == 3.0);
  const auto e = wer::align(words("a b c d"), words("a c d e"));
  CHECK(e.edits() == 2);
  CHECK(e.deletions == 1);
  CHECK(e.insertions == 1);
  CHECK(e.reference_words == 4);
  CHECK_THROWS_AS(rate("", "a"), InvalidInput);
}

TEST_CASE("word error rate agrees with an independent edit distance") {
  rng::Generator gen(17);
  const std::vector<std::string> lexicon{"a", "b", "c", "d", "e"};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> r(1 + gen.index(9)), h(gen.index(10));
    for (auto& w : r) w = lexicon[gen.index(lexicon.size())];
    for (auto& w : h) w = lexicon[gen.index(lexicon.size())];
    const auto e = wer::align(r, h);
    CAPTURE(trial);
    CHECK(e.edits() == levenshtein(r, h));
    CHECK(e.reference_words == r.size());
    // Counts describe a valid alignment.
    CHECK(r.size() - e.deletions + e.insertions == h.size());
    // Swapping roles swaps insertions and deletions.
    if (!h.empty()) {
      const auto s = wer::align(h, r);
      CHECK(s.edits() == e.edits());
    }
  }
}

TEST_CASE("mock teacher: no lookahead and one layer depends on the token only") {
  teacher::MockTeacherSpec spec;
  spec.layers = 1;
  spec.dim = 16;
  spec.lookahead = 0;
  const auto set =
      teacher::generate_mock_reps({utt("u", {3, 1, 3, 2, 3}), utt("v", {1, 3})}, spec);
  const auto m = set.matrix("u", 0, 1);
  const auto n = set.matrix("v", 0, 1);
  for (std::size_t d = 0; d < 16; ++d) {
    CHECK(m(0, d) == m(2, d));
    CHECK(m(0, d) == m(4, d));
    CHECK(m(1, d) == n(0, d));
    CHECK(m(0, d) == n(1, d));
  }
  CHECK(m(0, 0) != m(1, 0));
}

TEST_CASE("mock teacher: lookahead sees the next token") {
  teacher::MockTeacherSpec spec;
  spec.layers = 3;
  spec.dim = 32;
  spec.lookahead = 1;
  const auto set = teacher::generate_mock_reps(
      {utt("a", {4, 5, 6, 7}), utt("b", {4, 5, 6, 7}), utt("c", {4, 5, 9, 7})}, spec);
  for (std::uint32_t l = 1; l <= 3; ++l) {
    const auto a = set.matrix("a", 0, l), b = set.matrix("b", 0, l), c = set.matrix("c", 0, l);
    CHECK(cosine(a.row(1), b.row(1)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cosine(a.row(1), c.row(1)) < 1.0);  // y_2 differs
    CHECK(cosine(a.row(3), c.row(3)) < 1.0);  // y_2 is the past of position 3
    for (std::size_t d = 0; d < 32; ++d) CHECK(a(0, d) == c(0, d));  // outside the window
  }
}

TEST_CASE("mock teacher: determinism, header and masked variants") {
  const auto corpus = data::generate_synth_corpus(small_spec());
  teacher::MockTeacherSpec spec;
  spec.layers = 12;
  spec.dim = 768;
  spec.variants = 3;
  spec.mask_rate = 0.5;
  std::vector<data::Utterance> utts(corpus.train.begin(), corpus.train.begin() + 5);
  const auto a = teacher::generate_mock_reps(utts, spec);
  const auto b = teacher::generate_mock_reps(utts, spec);
  CHECK(teacher::encode_trep(a) == teacher::encode_trep(b));
  CHECK(a.layers() == 12);
  CHECK(a.dim() == 768);
  CHECK(a.variants() == 3);
  CHECK_NOTHROW(a.check_against(utts));

  bool differs = false;
  for (const auto& u : utts) {
    for (std::uint32_t l = 1; l <= 12; ++l) {
      const auto v0 = a.block(a.at(u.id), 0, l), v1 = a.block(a.at(u.id), 1, l);
      differs = differs || !std::equal(v0.begin(), v0.end(), v1.begin());
    }
  }
  CHECK(differs);

  // Variant 0 never depends on the masking parameters.
  auto unmasked = spec;
  unmasked.mask_rate = 0.0;
  const auto c = teacher::generate_mock_reps(utts, unmasked);
  for (const auto& u : utts) {
    const auto x = a.block(a.at(u.id), 0, 7), y = c.block(c.at(u.id), 0, 7);
    CHECK(std::equal(x.begin(), x.end(), y.begin()));
    const auto z = c.block(c.at(u.id), 2, 7);
    CHECK(std::equal(x.begin(), x.end(), z.begin()));
  }

  auto bad = spec;
  bad.mask_rate = 2;
  CHECK_THROWS_AS(teacher::generate_mock_reps(utts, bad), InvalidConfig);
}
