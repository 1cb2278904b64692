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


// Per-utterance training objective: transducer NLL plus lambda times the
// distillation distance, with the gradient of the sum.

#pragma once

#include <type_traits>

#include "repkd/distill.hpp"
#include "repkd/lattice.hpp"
#include "repkd/nn.hpp"

namespace repkd::objective {

struct KdTerm {
  const lattice::AlignmentPosterior* posterior = nullptr;  // frozen q
  const Tensor<float>* targets = nullptr;                  // N x D_out
  distill::Distance distance = distill::Distance::kL1;
  bool normalize = false;
  double lambda = 0.0;
};

struct Losses {
  double asr = 0.0;
  double kd = 0.0;  // before lambda
  double total(double lambda) const { return asr + lambda * kd; }
};

/// With kd == nullptr only the transducer loss is used. Gradients accumulate
/// into `grads` when it is non-null.
template <typename S>
Losses utterance_loss(const nn::Model<S>& model, const Tensor<S>& frames,
                      std::span<const int> tokens, const KdTerm* kd, std::type_identity_t<nn::Model<S>>* grads);

}  // namespace repkd::objective
