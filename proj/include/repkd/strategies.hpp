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

// Which teacher layers and which context variant feed distillation.
// Layers are 1-based transformer outputs; the embedding layer never appears.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repkd/tensor.hpp"

namespace repkd::strategies {

enum class LayerStrategy { kLast, kFirst, kUniform, kRandom, kMeanPool };

LayerStrategy parse_layer_strategy(const std::string& name);
std::string to_string(LayerStrategy s);

struct StrategySpec {
  LayerStrategy kind = LayerStrategy::kUniform;
  std::uint32_t layers_k = 1;      // K, ignored by MeanPool
  std::uint32_t total_layers = 12;  // L
  std::uint64_t seed = 0;          // Random draws from (seed, epoch)

  void validate() const;
};

/// Ascending 1-based layer indices for `epoch`.
///   Last    {L-K+1 .. L}
///   First   {1 .. K}
///   Uniform {k, 2k, .., Kk}, k = ceil(L/K), clipped to L and deduplicated
///   Random  K distinct layers, one draw per (seed, epoch) shared by all utterances
///   MeanPool {1 .. L}, to be averaged by mean_pool_layers
std::vector<std::uint32_t> select_layers(const StrategySpec& spec, std::uint64_t epoch);

/// Elementwise mean of equally shaped N x D matrices.
Tensor<float> mean_pool_layers(const std::vector<Tensor<float>>& layers);

struct ContextVariantPolicy {
  std::uint32_t variants = 1;  // M
  double mask_rate = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Variant id in [0, M) drawn from (seed, utterance id, epoch). Returns the
/// unmasked variant 0 when M = 1 or the mask rate is 0.
std::uint32_t sample_context_variant(const ContextVariantPolicy& policy,
                                     const std::string& utterance_id, std::uint64_t epoch);

}  // namespace repkd::strategies
