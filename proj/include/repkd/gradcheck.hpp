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


// Finite-difference checks of analytic parameter gradients.
//
// The error for one parameter tensor is norm-wise:
//   |g_analytic - g_fd| / max(|g_analytic|, |g_fd|)
// and falls back to the absolute difference when both norms are below 1e-10.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "repkd/nn.hpp"

namespace repkd::gradcheck {

struct TensorError {
  std::string name;
  double error = 0.0;
  double analytic_norm = 0.0;
  double numeric_norm = 0.0;
};

struct Report {
  std::vector<TensorError> tensors;
  double max_error() const;
  const TensorError& worst() const;
};

double relative_error(std::span<const double> analytic, std::span<const double> numeric);

using LossFn = std::function<double(const nn::Model<double>&)>;

/// Central differences of `loss` around `model` with step h for every
/// parameter, compared with `analytic` (same layout as model). `analytic` may
/// be a float model; it is widened before comparison.
template <typename S>
Report check(const nn::Model<double>& model, const LossFn& loss, const nn::Model<S>& analytic,
             double h = 1e-6);

}  // namespace repkd::gradcheck
