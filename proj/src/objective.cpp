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

#include "repkd/objective.hpp"

#include <algorithm>

#include "repkd/errors.hpp"

namespace repkd::objective {

template <typename S>
Losses utterance_loss(const nn::Model<S>& model, const Tensor<S>& frames,
                      std::span<const int> tokens, const KdTerm* kd, std::type_identity_t<nn::Model<S>>* grads) {
  Losses out;
  if (!kd) {
    out.asr = nn::asr_loss_and_grad(model, frames, tokens, grads);
    return out;
  }
  if (!kd->posterior || !kd->targets) throw ContractViolation("distillation term is incomplete");
  const auto& q = *kd->posterior;
  const auto cache = nn::forward(model, frames, tokens);
  const std::size_t N = tokens.size();
  if (q.tokens != N || q.frames != cache.phi.rows()) {
    throw ConsistencyError("posterior is " + std::to_string(q.tokens) + "x" +
                           std::to_string(q.frames) + ", utterance needs " + std::to_string(N) +
                           "x" + std::to_string(cache.phi.rows()));
  }
  const Tensor<S> phibar = distill::expected_phi(q, cache.phi);
  Tensor<S> psi = Tensor<S>::matrix(N, cache.states.cols());
  for (std::size_t i = 0; i < N; ++i) {
    std::copy(cache.states.row(i).begin(), cache.states.row(i).end(), psi.row(i).begin());
  }
  if (!grads) {
    out.asr = lattice::transducer_nll(cache.grid, tokens);
    out.kd = distill::kd_loss(phibar, psi, *kd->targets, model.regression, kd->distance,
                              kd->normalize);
    return out;
  }
  const auto g = lattice::transducer_grad(cache.grid, tokens);
  out.asr = g.nll;
  Tensor<S> d_phibar = Tensor<S>::matrix(N, phibar.cols());
  Tensor<S> d_psi = Tensor<S>::matrix(N, psi.cols());
  out.kd = distill::kd_loss_and_grad(phibar, psi, *kd->targets, model.regression, kd->distance,
                                     kd->normalize, kd->lambda, grads->regression, d_phibar,
                                     d_psi);
  Tensor<S> d_phi = Tensor<S>::matrix(cache.phi.rows(), cache.phi.cols());
  distill::expected_phi_backward(q, d_phibar, d_phi);
  Tensor<S> d_states = Tensor<S>::matrix(cache.states.rows(), cache.states.cols());
  for (std::size_t i = 0; i < N; ++i) {
    std::copy(d_psi.row(i).begin(), d_psi.row(i).end(), d_states.row(i).begin());
  }
  nn::backward(model, cache, std::span<const double>(g.grad), d_phi, d_states, *grads);
  return out;
}

template Losses utterance_loss(const nn::Model<float>&, const Tensor<float>&,
                               std::span<const int>, const KdTerm*, nn::Model<float>*);
template Losses utterance_loss(const nn::Model<double>&, const Tensor<double>&,
                               std::span<const int>, const KdTerm*, nn::Model<double>*);

}  // namespace repkd::objective
