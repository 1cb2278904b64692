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

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "repkd/errors.hpp"
#include "repkd/nn.hpp"

using namespace repkd;
using namespace repkd::nn;

TEST_CASE("output frame count rounds up") {
  ModelConfig c = testing::tiny_config();
  c.subsample = 3;
  CHECK(c.output_frames(1) == 1);
  CHECK(c.output_frames(3) == 1);
  CHECK(c.output_frames(4) == 2);
  CHECK(c.output_frames(9) == 3);
  const auto m = Model<double>::init(c, 1);
  const auto phi = encode_acoustic(testing::random_frames<double>(7, c.input_dim, 2), m.encoder, c);
  CHECK(phi.rows() == 3);
  CHECK(phi.cols() == c.encoder_dim);
}

TEST_CASE("config validation and digest") {
  ModelConfig c = testing::tiny_config();
  CHECK_NOTHROW(c.validate());
  ModelConfig d = c;
  d.joint_dim = 0;
  CHECK_THROWS_AS(d.validate(), InvalidConfig);
  d = c;
  d.subsample = 0;
  CHECK_THROWS_AS(d.validate(), InvalidConfig);
  d = c;
  d.embed_dim += 1;
  CHECK(d.digest() != c.digest());
  CHECK(c.digest() == testing::tiny_config().digest());
  CHECK(c.blank() == 4);
  CHECK(c.classes() == 5);
}

TEST_CASE("initialization is seeded and bounded") {
  const auto c = testing::tiny_config();
  const auto a = Model<float>::init(c, 5), b = Model<float>::init(c, 5), d = Model<float>::init(c, 6);
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != d.hash());
  a.visit([](const std::string&, const Tensor<float>& t) {
    for (float v : t.flat()) CHECK(std::abs(v) <= 1.0f);
  });
  // Fan-in bound on the first encoder layer: 1/sqrt(s * D_in).
  const float bound = 1.0f / std::sqrt(static_cast<float>(c.subsample * c.input_dim));
  for (float v : a.encoder.weights[0].flat()) CHECK(std::abs(v) <= bound);
}

TEST_CASE("parameter names are fixed and complete") {
  auto m = Model<float>::init(testing::tiny_config(), 1);
  std::vector<std::string> names;
  m.visit([&](const std::string& n, const Tensor<float>&) { names.push_back(n); });
  const std::vector<std::string> expect = {
      "encoder.0.weight",        "encoder.0.bias",        "encoder.1.weight",
      "encoder.1.bias",          "prediction.embedding",  "prediction.start",
      "prediction.input_weight", "prediction.hidden_weight", "prediction.bias",
      "joint.acoustic_proj",     "joint.text_proj",       "joint.output",
      "joint.bias"};
  CHECK(names == expect);
  m.add_regression(6, 2);
  names.clear();
  m.visit([&](const std::string& n, const Tensor<float>&) { names.push_back(n); });
  CHECK(names.back() == "regression.bias");
  CHECK(m.regression.weight.rows() == 6);
  CHECK(m.regression.weight.cols() == m.config.encoder_dim + m.config.prediction_dim);
}

TEST_CASE("prediction network is causal") {
  const auto c = testing::tiny_config();
  const auto m = Model<double>::init(c, 3);
  const std::vector<int> y = {1, 2, 0, 3};
  const auto states = encode_prefix(std::span<const int>(y), m.prediction);
  CHECK(states.rows() == 5);
  for (std::size_t u = 0; u <= y.size(); ++u) {
    // Changing tokens at positions >= u leaves row u untouched.
    std::vector<int> z = y;
    for (std::size_t k = u; k < z.size(); ++k) z[k] = (z[k] + 1) % 4;
    const auto other = encode_prefix(std::span<const int>(z), m.prediction);
    for (std::size_t d = 0; d < c.prediction_dim; ++d) CHECK(other(u, d) == states(u, d));
  }
  // Row 0 is the learned start state.
  for (std::size_t d = 0; d < c.prediction_dim; ++d) CHECK(states(0, d) == m.prediction.start[d]);
  // Incremental steps reproduce the batched rows.
  std::vector<double> h(m.prediction.start.flat().begin(), m.prediction.start.flat().end());
  for (std::size_t u = 0; u < y.size(); ++u) {
    h = prediction_step(m.prediction, std::span<const double>(h), y[u]);
    for (std::size_t d = 0; d < c.prediction_dim; ++d) {
      CHECK(h[d] == doctest::Approx(states(u + 1, d)).epsilon(1e-14));
    }
  }
}

TEST_CASE("joint outputs normalized log-distributions") {
  const auto c = testing::tiny_config();
  const auto m = Model<double>::init(c, 4);
  const auto frames = testing::random_frames<double>(6, c.input_dim, 5);
  const std::vector<int> y = {0, 3};
  const auto cache = forward(m, frames, std::span<const int>(y));
  CHECK(cache.grid.frames() == 3);
  CHECK(cache.grid.tokens() == 2);
  CHECK(cache.grid.classes() == 5);
  CHECK(cache.grid.max_normalization_error() < 1e-12);
  // The single-cell joint agrees with the grid.
  const auto cell = joint(cache.phi.row(1), cache.states.row(2), m.joint);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(cell[k] == doctest::Approx(cache.grid.at(1, 2, k)).epsilon(1e-13));
  }
}

TEST_CASE("float and double forward agree") {
  const auto c = testing::tiny_config();
  const auto md = Model<double>::init(c, 8);
  const auto mf = md.cast<float>();
  const auto frames = testing::random_frames<double>(5, c.input_dim, 9);
  const std::vector<int> y = {2, 1};
  const double nd = asr_loss_and_grad(md, frames, std::span<const int>(y), nullptr);
  const double nf = asr_loss_and_grad(mf, frames.cast<float>(), std::span<const int>(y), nullptr);
  CHECK(nf == doctest::Approx(nd).epsilon(1e-5));
}

TEST_CASE("contract violations") {
  const auto c = testing::tiny_config();
  const auto m = Model<double>::init(c, 1);
  const auto wrong = testing::random_frames<double>(4, c.input_dim + 1, 1);
  CHECK_THROWS_AS(encode_acoustic(wrong, m.encoder, c), Error);
  ForwardCache<double> empty;
  auto g = m.zeros_like();
  CHECK_THROWS_AS(backward(m, empty, {}, Tensor<double>(), Tensor<double>(), g), ContractViolation);
  CHECK_THROWS_AS(encode_prefix(std::vector<int>{9}, m.prediction), Error);
}
