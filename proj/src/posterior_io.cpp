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

#include "repkd/posterior_io.hpp"

#include <cmath>

#include "repkd/binio.hpp"
#include "repkd/random.hpp"

namespace repkd {

void PosteriorSet::add(std::string id, lattice::AlignmentPosterior q) {
  if (index_.count(id)) throw InvalidInput("duplicate posterior for utterance " + id);
  index_.emplace(id, ids_.size());
  ids_.push_back(std::move(id));
  items_.push_back(std::move(q));
}

const lattice::AlignmentPosterior* PosteriorSet::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &items_[it->second];
}

void PosteriorSet::round_to_f32() {
  for (auto& item : items_) {
    for (double& v : item.q) v = static_cast<double>(static_cast<float>(v));
  }
}

void PosteriorSet::mark_frozen() {
  for (auto& item : items_) item.frozen = true;
}

std::uint64_t PosteriorSet::hash() const {
  std::uint64_t h = rng::fnv1a("ALNQ");
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    h = rng::fnv1a(ids_[i], h);
    const auto& q = items_[i];
    const std::uint64_t dims[2] = {q.tokens, q.frames};
    h = rng::fnv1a_bytes(dims, sizeof(dims), h);
    h = rng::fnv1a_bytes(q.q.data(), q.q.size() * sizeof(double), h);
  }
  return h;
}

std::vector<std::uint8_t> encode_alnq(const PosteriorSet& set) {
  binio::Writer w;
  w.magic("ALNQ");
  w.u32(kAlnqVersion);
  w.u64(set.size());
  std::vector<float> row;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& q = set.at(i);
    w.short_string(set.ids()[i]);
    w.u32(static_cast<std::uint32_t>(q.tokens));
    w.u32(static_cast<std::uint32_t>(q.frames));
    row.assign(q.q.begin(), q.q.end());
    w.f32s(row);
  }
  return w.bytes();
}

void write_alnq(const std::filesystem::path& path, const PosteriorSet& set) {
  binio::write_file(path, encode_alnq(set));
}

PosteriorSet decode_alnq(std::vector<std::uint8_t> bytes, const std::string& what) {
  binio::Reader r(std::move(bytes), what);
  r.expect_magic("ALNQ");
  const std::uint32_t version = r.u32();
  if (version != kAlnqVersion) {
    throw FormatError(what + ": unsupported ALNQ version " + std::to_string(version));
  }
  const std::uint64_t count = r.u64();
  PosteriorSet set;
  std::vector<float> buf;
  for (std::uint64_t n = 0; n < count; ++n) {
    std::string id = r.short_string();
    if (set.find(id)) throw FormatError(what + ": duplicate utterance " + id);
    lattice::AlignmentPosterior q;
    q.tokens = r.u32();
    q.frames = r.u32();
    if (q.tokens * q.frames > r.remaining() / sizeof(float)) {
      throw FormatError(what + ": truncated posterior block for " + id);
    }
    buf.resize(q.tokens * q.frames);
    r.f32s(buf);
    q.q.assign(buf.begin(), buf.end());
    q.frozen = true;
    for (std::size_t i = 0; i < q.tokens; ++i) {
      double sum = 0.0;
      for (double v : q.row(i)) {
        if (!(v >= 0.0 && v <= 1.0)) {
          throw FormatError(what + ": probability out of range in " + id);
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > kAlnqRowTolerance) {
        throw FormatError(what + ": row " + std::to_string(i) + " of " + id +
                          " sums to " + std::to_string(sum));
      }
    }
    set.add(std::move(id), std::move(q));
  }
  if (!r.at_end()) throw FormatError(what + ": trailing bytes after last utterance");
  return set;
}

PosteriorSet read_alnq(const std::filesystem::path& path) {
  return decode_alnq(binio::read_file(path), path.string());
}

}  // namespace repkd
