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

#include "repkd/teacher_reps.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "repkd/binio.hpp"
#include "repkd/errors.hpp"
#include "repkd/random.hpp"

namespace repkd::teacher {

TeacherRepSet::TeacherRepSet(std::string teacher_id, std::uint32_t layers, std::uint32_t dim,
                             std::uint32_t variants)
    : teacher_id_(std::move(teacher_id)), layers_(layers), dim_(dim), variants_(variants) {
  if (layers_ == 0 || dim_ == 0 || variants_ == 0) {
    throw InvalidInput("teacher '" + teacher_id_ + "' needs L, D and M all positive");
  }
}

void TeacherRepSet::add(UtteranceReps reps) {
  const std::size_t want =
      std::size_t{variants_} * layers_ * reps.tokens * dim_;
  if (reps.values.size() != want) {
    throw ContractViolation("representations for " + reps.id + " hold " +
                            std::to_string(reps.values.size()) + " values, expected " +
                            std::to_string(want));
  }
  if (index_.contains(reps.id)) {
    throw ConsistencyError("duplicate utterance " + reps.id + " in teacher " + teacher_id_);
  }
  index_.emplace(reps.id, utts_.size());
  utts_.push_back(std::move(reps));
}

const UtteranceReps* TeacherRepSet::find(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &utts_[it->second];
}

const UtteranceReps& TeacherRepSet::at(const std::string& id) const {
  const auto* u = find(id);
  if (!u) throw ConsistencyError("teacher " + teacher_id_ + " has no representations for " + id);
  return *u;
}

std::span<const float> TeacherRepSet::block(const UtteranceReps& u, std::uint32_t variant,
                                            std::uint32_t layer) const {
  if (variant >= variants_ || layer < 1 || layer > layers_) {
    throw ContractViolation("teacher " + teacher_id_ + ": no block for variant " +
                            std::to_string(variant) + ", layer " + std::to_string(layer));
  }
  const std::size_t n = std::size_t{u.tokens} * dim_;
  const std::size_t offset = (std::size_t{variant} * layers_ + (layer - 1)) * n;
  return std::span<const float>(u.values).subspan(offset, n);
}

Tensor<float> TeacherRepSet::matrix(const std::string& id, std::uint32_t variant,
                                    std::uint32_t layer) const {
  const auto& u = at(id);
  const auto b = block(u, variant, layer);
  Tensor<float> out = Tensor<float>::matrix(u.tokens, dim_);
  std::copy(b.begin(), b.end(), out.flat().begin());
  return out;
}

void TeacherRepSet::check_against(const std::vector<data::Utterance>& utts) const {
  for (const auto& u : utts) {
    const auto& reps = at(u.id);
    if (reps.tokens != u.tokens.size()) {
      throw ConsistencyError("utterance " + u.id + ": teacher " + teacher_id_ + " has " +
                             std::to_string(reps.tokens) + " token rows, manifest has " +
                             std::to_string(u.tokens.size()) + " tokens");
    }
  }
}

// --- TREP ------------------------------------------------------------------------

std::vector<std::uint8_t> encode_trep(const TeacherRepSet& set) {
  binio::Writer w;
  w.magic("TREP");
  w.u32(kTrepVersion);
  w.short_string(set.teacher_id());
  w.u32(set.layers());
  w.u32(set.dim());
  w.u32(set.variants());
  w.u64(set.size());
  for (const auto& u : set.utterances()) {
    w.short_string(u.id);
    w.u32(u.tokens);
    w.f32s(u.values);
  }
  return w.bytes();
}

TeacherRepSet decode_trep(std::vector<std::uint8_t> bytes, const std::string& what) {
  binio::Reader r(std::move(bytes), what);
  r.expect_magic("TREP");
  const std::uint32_t version = r.u32();
  if (version != kTrepVersion) {
    throw FormatError(what + ": unsupported TREP version " + std::to_string(version));
  }
  std::string teacher_id = r.short_string();
  const std::uint32_t L = r.u32(), D = r.u32(), M = r.u32();
  if (L == 0 || D == 0 || M == 0) {
    throw FormatError(what + ": header declares L=" + std::to_string(L) + " D=" +
                      std::to_string(D) + " M=" + std::to_string(M));
  }
  TeacherRepSet set(std::move(teacher_id), L, D, M);
  const std::uint64_t count = r.u64();
  for (std::uint64_t k = 0; k < count; ++k) {
    UtteranceReps u;
    u.id = r.short_string();
    u.tokens = r.u32();
    const std::size_t n = std::size_t{M} * L * u.tokens * D;
    if (n > r.remaining() / sizeof(float)) {
      throw FormatError(what + ": truncated representations for utterance " + u.id);
    }
    u.values.resize(n);
    r.f32s(u.values);
    for (float v : u.values) {
      if (!std::isfinite(v)) throw FormatError(what + ": non-finite value in utterance " + u.id);
    }
    try {
      set.add(std::move(u));
    } catch (const ConsistencyError& e) {
      throw FormatError(what + ": " + e.what());
    }
  }
  if (!r.at_end()) throw FormatError(what + ": trailing bytes after last utterance");
  return set;
}

void write_teacher_reps(const std::filesystem::path& path, const TeacherRepSet& set) {
  binio::write_file(path, encode_trep(set));
}

TeacherRepSet read_teacher_reps(const std::filesystem::path& path) {
  return decode_trep(binio::read_file(path), path.string());
}

// --- mock teacher ------------------------------------------------------------------

void MockTeacherSpec::validate() const {
  if (layers == 0 || dim == 0) throw InvalidConfig("mock teacher needs positive L and D");
  if (variants == 0) throw InvalidConfig("mock teacher needs at least one variant");
  if (!(mask_rate >= 0.0 && mask_rate <= 1.0)) throw InvalidConfig("mask rate must be in [0, 1]");
  if (teacher_id.empty()) throw InvalidConfig("mock teacher id is empty");
}

namespace {

constexpr std::int64_t kPad = -1;
constexpr std::int64_t kMask = -2;

double hash_uniform(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

class MockTeacher {
 public:
  explicit MockTeacher(const MockTeacherSpec& spec) : spec_(spec) {
    const std::uint32_t D = spec.dim, L = spec.layers, w = spec.lookahead;
    rng::Generator gen(rng::derive(spec.seed, rng::Stream::kMockTeacher));
    signs_.assign((2 * w + 1) * D, 1.0);
    for (std::uint32_t o = 0; o < 2 * w + 1; ++o) {
      if (o == w) continue;
      for (std::uint32_t d = 0; d < D; ++d) signs_[o * D + d] = gen.uniform() < 0.5 ? -1.0 : 1.0;
    }
    gain_.resize(std::size_t{L} * D);
    shift_.resize(std::size_t{L} * D);
    for (auto& g : gain_) g = gen.uniform(0.5, 1.5);
    for (auto& b : shift_) b = 0.1 * gen.normal();
    weight_.resize(std::size_t{L} * (2 * w + 1));
    for (std::uint32_t l = 1; l <= L; ++l) {
      const double depth = static_cast<double>(l) / L;
      for (std::uint32_t o = 0; o < 2 * w + 1; ++o) {
        const double dist = std::abs(static_cast<double>(o) - w);
        weight_[(l - 1) * (2 * w + 1) + o] = std::exp(-dist * (1.5 - depth));
      }
    }
  }

  const std::vector<double>& embedding(std::int64_t token) {
    auto it = table_.find(token);
    if (it != table_.end()) return it->second;
    rng::Generator gen(rng::derive(spec_.seed, rng::Stream::kMockTeacher, token + 3));
    std::vector<double> e(spec_.dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec_.lookahead) + 1.0);
    for (auto& v : e) v = scale * gen.normal();
    return table_.emplace(token, std::move(e)).first->second;
  }

  // Appends L x N x D for one variant.
  void render(const data::Utterance& u, std::uint32_t variant, std::vector<float>& out) {
    const std::uint32_t D = spec_.dim, L = spec_.layers;
    const std::int64_t w = spec_.lookahead;
    const std::size_t N = u.tokens.size();
    const std::uint64_t uh = rng::fnv1a(u.id);
    // Window contents are shared by all layers.
    std::vector<std::int64_t> window(N * (2 * w + 1));
    for (std::size_t i = 0; i < N; ++i) {
      for (std::int64_t o = -w; o <= w; ++o) {
        const std::int64_t pos = static_cast<std::int64_t>(i) + o;
        std::int64_t tok = (pos < 0 || pos >= static_cast<std::int64_t>(N))
                               ? kPad
                               : u.tokens[static_cast<std::size_t>(pos)];
        if (variant > 0 && o != 0 && tok != kPad) {
          const auto h = rng::derive(spec_.seed, rng::Stream::kMockMask, uh, variant, i,
                                     static_cast<std::uint64_t>(o + w));
          if (hash_uniform(h) < spec_.mask_rate) tok = kMask;
        }
        window[i * (2 * w + 1) + static_cast<std::size_t>(o + w)] = tok;
      }
    }
    std::vector<double> base(D);
    for (std::uint32_t l = 1; l <= L; ++l) {
      const double* c = &weight_[(l - 1) * (2 * w + 1)];
      const double* g = &gain_[(l - 1) * std::size_t{D}];
      const double* b = &shift_[(l - 1) * std::size_t{D}];
      for (std::size_t i = 0; i < N; ++i) {
        std::fill(base.begin(), base.end(), 0.0);
        for (std::size_t o = 0; o < static_cast<std::size_t>(2 * w + 1); ++o) {
          const auto& e = embedding(window[i * (2 * w + 1) + o]);
          const double* s = &signs_[o * D];
          for (std::uint32_t d = 0; d < D; ++d) base[d] += c[o] * e[d] * s[d];
        }
        for (std::uint32_t d = 0; d < D; ++d) {
          out.push_back(static_cast<float>(std::tanh(g[d] * base[d] + b[d])));
        }
      }
    }
  }

 private:
  MockTeacherSpec spec_;
  std::vector<double> signs_, gain_, shift_, weight_;
  std::map<std::int64_t, std::vector<double>> table_;
};

}  // namespace

TeacherRepSet generate_mock_reps(const std::vector<data::Utterance>& utts,
                                 const MockTeacherSpec& spec) {
  spec.validate();
  MockTeacher teacher(spec);
  TeacherRepSet set(spec.teacher_id, spec.layers, spec.dim, spec.variants);
  for (const auto& u : utts) {
    UtteranceReps reps;
    reps.id = u.id;
    reps.tokens = static_cast<std::uint32_t>(u.tokens.size());
    reps.values.reserve(std::size_t{spec.variants} * spec.layers * u.tokens.size() * spec.dim);
    for (std::uint32_t v = 0; v < spec.variants; ++v) teacher.render(u, v, reps.values);
    set.add(std::move(reps));
  }
  return set;
}

}  // namespace repkd::teacher
