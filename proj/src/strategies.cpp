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

#include "repkd/strategies.hpp"

#include <algorithm>
#include <numeric>

#include "repkd/random.hpp"

namespace repkd::strategies {

LayerStrategy parse_layer_strategy(const std::string& name) {
  if (name == "last") return LayerStrategy::kLast;
  if (name == "first") return LayerStrategy::kFirst;
  if (name == "uniform") return LayerStrategy::kUniform;
  if (name == "random") return LayerStrategy::kRandom;
  if (name == "meanpool") return LayerStrategy::kMeanPool;
  throw InvalidConfig("unknown layer strategy '" + name +
                      "' (expected last, first, uniform, random or meanpool)");
}

std::string to_string(LayerStrategy s) {
  switch (s) {
    case LayerStrategy::kLast: return "last";
    case LayerStrategy::kFirst: return "first";
    case LayerStrategy::kUniform: return "uniform";
    case LayerStrategy::kRandom: return "random";
    case LayerStrategy::kMeanPool: return "meanpool";
  }
  return "?";
}

void StrategySpec::validate() const {
  if (total_layers == 0) throw InvalidConfig("teacher has no layers");
  if (kind == LayerStrategy::kMeanPool) return;
  if (layers_k < 1 || layers_k > total_layers) {
    throw InvalidConfig("kd.layers_k = " + std::to_string(layers_k) + " must be in [1, " +
                        std::to_string(total_layers) + "]");
  }
}

std::vector<std::uint32_t> select_layers(const StrategySpec& spec, std::uint64_t epoch) {
  spec.validate();
  const std::uint32_t L = spec.total_layers, K = spec.layers_k;
  std::vector<std::uint32_t> out;
  switch (spec.kind) {
    case LayerStrategy::kLast:
      for (std::uint32_t l = L - K + 1; l <= L; ++l) out.push_back(l);
      break;
    case LayerStrategy::kFirst:
      for (std::uint32_t l = 1; l <= K; ++l) out.push_back(l);
      break;
    case LayerStrategy::kUniform: {
      const std::uint32_t stride = (L + K - 1) / K;
      for (std::uint32_t j = 1; j <= K; ++j) {
        const std::uint32_t l = std::min(j * stride, L);
        if (out.empty() || out.back() != l) out.push_back(l);
      }
      break;
    }
    case LayerStrategy::kRandom: {
      rng::Generator gen(rng::derive(spec.seed, rng::Stream::kRandomLayers, epoch));
      std::vector<std::uint32_t> pool(L);
      std::iota(pool.begin(), pool.end(), 1u);
      // Partial Fisher-Yates.
      for (std::uint32_t i = 0; i < K; ++i) {
        const auto j = i + static_cast<std::uint32_t>(gen.index(L - i));
        std::swap(pool[i], pool[j]);
      }
      out.assign(pool.begin(), pool.begin() + K);
      std::sort(out.begin(), out.end());
      break;
    }
    case LayerStrategy::kMeanPool:
      for (std::uint32_t l = 1; l <= L; ++l) out.push_back(l);
      break;
  }
  return out;
}

Tensor<float> mean_pool_layers(const std::vector<Tensor<float>>& layers) {
  if (layers.empty()) throw ContractViolation("mean pooling needs at least one layer");
  std::vector<double> acc(layers.front().size(), 0.0);
  for (const auto& l : layers) {
    if (!l.same_shape(layers.front())) {
      throw ContractViolation("cannot mean-pool layers of shapes " +
                              shape_string(layers.front().dims()) + " and " +
                              shape_string(l.dims()));
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += l[i];
  }
  Tensor<float> out(layers.front().dims());
  const double inv = 1.0 / static_cast<double>(layers.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i] * inv);
  return out;
}

void ContextVariantPolicy::validate() const {
  if (variants < 1) throw InvalidConfig("kd.context_variants must be at least 1");
  if (!(mask_rate >= 0.0 && mask_rate <= 1.0)) {
    throw InvalidConfig("kd.mask_rate must be in [0, 1]");
  }
}

std::uint32_t sample_context_variant(const ContextVariantPolicy& policy,
                                     const std::string& utterance_id, std::uint64_t epoch) {
  if (policy.variants <= 1 || policy.mask_rate == 0.0) return 0;
  rng::Generator gen(rng::derive(policy.seed, rng::Stream::kContextVariant,
                                 rng::fnv1a(utterance_id), epoch));
  return static_cast<std::uint32_t>(gen.index(policy.variants));
}

}  // namespace repkd::strategies
