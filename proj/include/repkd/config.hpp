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


// Run configuration. Files hold flat `section.key = value` lines; '#' starts a
// comment. Precedence: command-line overrides > file > defaults. Unknown keys
// are rejected.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "repkd/distill.hpp"
#include "repkd/nn.hpp"
#include "repkd/strategies.hpp"

namespace repkd::config {

enum class Optimizer { kSgd, kAdam };

struct RunConfig {
  // data
  std::string train_manifest;
  std::string dev_manifest;
  std::string vocab;  // empty: vocab.txt beside the training manifest, if present
  std::string out_dir = "run";

  // model
  nn::ModelConfig model;
  std::uint64_t model_seed = 1;

  // kd
  double lambda = 0.01;
  strategies::LayerStrategy strategy = strategies::LayerStrategy::kUniform;
  std::uint32_t layers_k = 2;
  std::vector<std::string> teachers;  // kd.models, comma separated
  std::string reps_dir;               // <reps_dir>/<teacher>.trep
  distill::Distance distance = distill::Distance::kL1;
  bool kd_normalize = false;  // divide the per-utterance KD sum by N
  std::uint32_t context_variants = 1;
  double mask_rate = 0.0;
  std::uint64_t kd_seed = 0;

  // train
  std::size_t epochs = 20;
  Optimizer optimizer = Optimizer::kSgd;
  double learning_rate = 0.02;
  double momentum = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  std::size_t batch_size = 8;
  std::uint64_t train_seed = 1;
  double clip_norm = 5.0;  // global gradient norm; 0 disables
  std::size_t threads = 0;  // 0: REPKD_THREADS or hardware concurrency

  // iter2
  bool fresh_init = false;
  std::size_t iter2_epochs = 0;  // 0: train.epochs

  // eval
  std::size_t max_symbols_per_frame = 10;
  std::string eval_manifest;
  std::string eval_report;

  /// Sets one key from its textual value. Throws InvalidConfig.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  /// Every key in a fixed order.
  static const std::vector<std::string>& keys();

  void validate() const;
  /// `key = value` lines for every key, in keys() order.
  std::string dump() const;

  std::size_t second_iteration_epochs() const { return iter2_epochs ? iter2_epochs : epochs; }
};

/// Applies a config file on top of `cfg`. Lines name their file and line
/// number in errors.
void apply_file(RunConfig& cfg, const std::filesystem::path& path);

/// Parses "key=value".
std::pair<std::string, std::string> split_assignment(const std::string& text);

std::string to_string(Optimizer o);

}  // namespace repkd::config
