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


// Greedy transducer decoding.

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "repkd/nn.hpp"

namespace repkd::decode {

/// Log-distribution over classes on frame t given the labels emitted so far.
using Scorer = std::function<std::vector<double>(std::size_t t, const std::vector<int>& prefix)>;

/// Frame-synchronous greedy search: on each frame emit the arg-max label
/// until blank wins or `max_symbols` labels were emitted on that frame.
/// Ties go to the lower class id.
std::vector<int> greedy_search(std::size_t frames, int blank, std::size_t max_symbols,
                               const Scorer& scorer);

/// Greedy search with the student's joint network; the prediction state is
/// advanced incrementally.
template <typename S>
std::vector<int> greedy_decode(const nn::Model<S>& model, const Tensor<S>& frames,
                               std::size_t max_symbols);

}  // namespace repkd::decode
