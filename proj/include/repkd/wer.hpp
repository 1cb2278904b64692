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


// Word error rate by unit-cost Levenshtein alignment.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace repkd::wer {

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t reference_words = 0;

  std::size_t edits() const { return substitutions + insertions + deletions; }
  EditCounts& operator+=(const EditCounts& o);
};

/// Minimum-edit alignment; ties prefer substitution, then deletion.
EditCounts align(const std::vector<std::string>& reference,
                 const std::vector<std::string>& hypothesis);

/// edits / reference words. Throws InvalidInput for an empty reference.
double word_error_rate(const EditCounts& counts);

}  // namespace repkd::wer
