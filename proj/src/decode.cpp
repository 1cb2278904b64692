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

#include "repkd/decode.hpp"

#include <algorithm>

#include "repkd/errors.hpp"

namespace repkd::decode {

std::vector<int> greedy_search(std::size_t frames, int blank, std::size_t max_symbols,
                               const Scorer& scorer) {
  if (max_symbols == 0) throw InvalidConfig("max symbols per frame must be positive");
  std::vector<int> out;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t emitted = 0; emitted < max_symbols; ++emitted) {
      const auto lp = scorer(t, out);
      if (blank < 0 || static_cast<std::size_t>(blank) >= lp.size()) {
        throw ContractViolation("blank index outside the scorer's class range");
      }
      const auto best = static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
      if (best == blank) break;
      out.push_back(best);
    }
  }
  return out;
}

template <typename S>
std::vector<int> greedy_decode(const nn::Model<S>& model, const Tensor<S>& frames,
                               std::size_t max_symbols) {
  const Tensor<S> phi = nn::encode_acoustic(frames, model.encoder, model.config);
  std::vector<S> state(model.prediction.start.flat().begin(), model.prediction.start.flat().end());
  std::size_t consumed = 0;
  const Scorer scorer = [&](std::size_t t, const std::vector<int>& prefix) {
    // The search only ever appends, so one step per new label suffices.
    for (; consumed < prefix.size(); ++consumed) {
      state = nn::prediction_step(model.prediction, std::span<const S>(state), prefix[consumed]);
    }
    return nn::joint(phi.row(t), std::span<const S>(state), model.joint);
  };
  return greedy_search(phi.rows(), model.config.blank(), max_symbols, scorer);
}

template std::vector<int> greedy_decode(const nn::Model<float>&, const Tensor<float>&, std::size_t);
template std::vector<int> greedy_decode(const nn::Model<double>&, const Tensor<double>&, std::size_t);

}  // namespace repkd::decode
