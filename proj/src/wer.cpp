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

#include "repkd/wer.hpp"

#include <algorithm>

#include "repkd/errors.hpp"

namespace repkd::wer {

EditCounts& EditCounts::operator+=(const EditCounts& o) {
  substitutions += o.substitutions;
  insertions += o.insertions;
  deletions += o.deletions;
  reference_words += o.reference_words;
  return *this;
}

EditCounts align(const std::vector<std::string>& reference,
                 const std::vector<std::string>& hypothesis) {
  const std::size_t R = reference.size(), H = hypothesis.size();
  // cost[r][h] with back-pointers for the edit breakdown.
  std::vector<std::size_t> cost((R + 1) * (H + 1));
  std::vector<char> op((R + 1) * (H + 1), 0);
  auto at = [H](std::size_t r, std::size_t h) { return r * (H + 1) + h; };
  for (std::size_t r = 0; r <= R; ++r) { cost[at(r, 0)] = r; op[at(r, 0)] = 'D'; }
  for (std::size_t h = 0; h <= H; ++h) { cost[at(0, h)] = h; op[at(0, h)] = 'I'; }
  for (std::size_t r = 1; r <= R; ++r) {
    for (std::size_t h = 1; h <= H; ++h) {
      const bool same = reference[r - 1] == hypothesis[h - 1];
      std::size_t best = cost[at(r - 1, h - 1)] + (same ? 0 : 1);
      char how = same ? 'M' : 'S';
      if (cost[at(r - 1, h)] + 1 < best) { best = cost[at(r - 1, h)] + 1; how = 'D'; }
      if (cost[at(r, h - 1)] + 1 < best) { best = cost[at(r, h - 1)] + 1; how = 'I'; }
      cost[at(r, h)] = best;
      op[at(r, h)] = how;
    }
  }
  EditCounts counts;
  counts.reference_words = R;
  std::size_t r = R, h = H;
  while (r > 0 || h > 0) {
    switch (op[at(r, h)]) {
      case 'M': --r; --h; break;
      case 'S': ++counts.substitutions; --r; --h; break;
      case 'D': ++counts.deletions; --r; break;
      default: ++counts.insertions; --h; break;
    }
  }
  return counts;
}

double word_error_rate(const EditCounts& counts) {
  if (counts.reference_words == 0) throw InvalidInput("word error rate needs a non-empty reference");
  return static_cast<double>(counts.edits()) / static_cast<double>(counts.reference_words);
}

}  // namespace repkd::wer
