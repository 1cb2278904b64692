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

#include <cmath>

#include "helpers.hpp"
#include "repkd/decode.hpp"

using namespace repkd;

namespace {

std::vector<double> peaked(std::size_t classes, std::size_t winner) {
  std::vector<double> out(classes, std::log(0.1 / static_cast<double>(classes - 1)));
  out[winner] = std::log(0.9);
  return out;
}

}  // namespace

TEST_CASE("all-blank scorer gives an empty hypothesis") {
  const auto hyp = decode::greedy_search(7, 3, 10, [](std::size_t, const std::vector<int>&) {
    return peaked(4, 3);
  });
  CHECK(hyp.empty());
}

TEST_CASE("scorer built from an alignment recovers its labels") {
  // Frame t emits plan[t] labels before its blank.
  const std::vector<std::vector<int>> plan{{2}, {}, {0, 1}, {}, {1, 1, 2}};
  std::vector<int> want;
  std::vector<std::size_t> emitted_before(plan.size() + 1, 0);
  for (std::size_t t = 0; t < plan.size(); ++t) {
    emitted_before[t + 1] = emitted_before[t] + plan[t].size();
    want.insert(want.end(), plan[t].begin(), plan[t].end());
  }
  const int blank = 3;
  auto scorer = [&](std::size_t t, const std::vector<int>& prefix) {
    const std::size_t k = prefix.size() - emitted_before[t];
    return k < plan[t].size() ? peaked(4, static_cast<std::size_t>(plan[t][k]))
                              : peaked(4, blank);
  };
  CHECK(decode::greedy_search(plan.size(), blank, 10, scorer) == want);
}

TEST_CASE("emission cap and ties") {
  // Label 1 always wins: every frame stops at the cap.
  auto greedy = [](std::size_t, const std::vector<int>&) { return peaked(3, 1); };
  CHECK(decode::greedy_search(4, 2, 3, greedy) == std::vector<int>(12, 1));
  // A tie between label 0 and blank resolves to the lower id.
  auto tie = [](std::size_t, const std::vector<int>&) {
    return std::vector<double>{std::log(0.5), -50.0, std::log(0.5)};
  };
  CHECK(decode::greedy_search(2, 2, 1, tie) == std::vector<int>{0, 0});
}

TEST_CASE("model decoding matches a scorer that re-encodes each prefix") {
  auto cfg = testing::tiny_config();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto model = nn::Model<double>::init(cfg, seed);
    // Favour labels so hypotheses are not trivially empty.
    for (std::size_t k = 0; k < cfg.vocab_size; ++k) {
      for (std::size_t j = 0; j < cfg.joint_dim; ++j) model.joint.output(k, j) *= 3.0;
    }
    const auto frames = testing::random_frames<double>(9, cfg.input_dim, 100 + seed);
    const auto phi = nn::encode_acoustic(frames, model.encoder, cfg);
    auto scorer = [&](std::size_t t, const std::vector<int>& prefix) {
      const auto states = nn::encode_prefix<double>(prefix, model.prediction);
      return nn::joint<double>(phi.row(t), states.row(prefix.size()), model.joint);
    };
    const auto want = decode::greedy_search(phi.rows(), cfg.blank(), 4, scorer);
    CHECK(decode::greedy_decode(model, frames, 4) == want);
    const auto f32 = model.cast<float>();
    const auto hyp32 = decode::greedy_decode(f32, frames.cast<float>(), 4);
    CHECK(hyp32.size() <= phi.rows() * 4);
  }
}
