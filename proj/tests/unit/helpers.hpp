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


#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "repkd/lattice.hpp"
#include "repkd/nn.hpp"
#include "repkd/random.hpp"

namespace testing {

/// Log-softmax-normalized grid with logits drawn from N(0, scale^2).
inline repkd::lattice::JointLogProbGrid random_grid(std::size_t T, std::size_t N, std::size_t C,
                                                    std::uint64_t seed, double scale = 1.5) {
  repkd::rng::Generator gen(seed);
  repkd::lattice::JointLogProbGrid grid(T, N, C, C - 1);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u <= N; ++u) {
      auto cell = grid.cell(t, u);
      for (auto& v : cell) v = scale * gen.normal();
      const double z = repkd::lattice::log_sum_exp(cell);
      for (auto& v : cell) v -= z;
    }
  }
  return grid;
}

inline std::vector<int> random_tokens(std::size_t N, std::size_t labels, std::uint64_t seed) {
  repkd::rng::Generator gen(seed);
  std::vector<int> y(N);
  for (auto& v : y) v = static_cast<int>(gen.index(labels));
  return y;
}

inline repkd::nn::ModelConfig tiny_config() {
  repkd::nn::ModelConfig c;
  c.input_dim = 3;
  c.subsample = 2;
  c.encoder_layers = 2;
  c.encoder_dim = 5;
  c.vocab_size = 4;
  c.embed_dim = 3;
  c.prediction_dim = 4;
  c.joint_dim = 5;
  return c;
}

template <typename S>
repkd::Tensor<S> random_frames(std::size_t T, std::size_t D, std::uint64_t seed) {
  repkd::rng::Generator gen(seed);
  auto t = repkd::Tensor<S>::matrix(T, D);
  for (auto& v : t.flat()) v = static_cast<S>(gen.normal());
  return t;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("repkd_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
