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

// Representation distillation loss.
//
// For every target token i the student predicts the teacher vector h_i from
// the posterior-weighted acoustic feature and the prediction state:
//
//   phibar_i = sum_t q_i(t) phi_t
//   L_KD     = sum_i d(R([phibar_i; psi_i]), h_i)
//
// with R linear and d either L1 or squared L2. kd_loss_exact keeps the
// expectation outside d and exists as a reference; for convex d and linear R
// it upper-bounds kd_loss.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "repkd/lattice.hpp"
#include "repkd/nn.hpp"
#include "repkd/tensor.hpp"

namespace repkd::distill {

enum class Distance { kL1, kL2Squared };

Distance parse_distance(const std::string& name);
std::string to_string(Distance d);

/// Identifies one teacher matrix. Layer 0 denotes the mean over all layers.
struct ComponentKey {
  std::string model;
  std::uint32_t variant = 0;
  std::uint32_t layer = 0;

  friend auto operator<=>(const ComponentKey&, const ComponentKey&) = default;
};

struct ComponentDescriptor {
  ComponentKey key;
  std::size_t dim = 0;
  std::size_t offset = 0;
};

struct RepComponent {
  ComponentKey key;
  Tensor<float> values;  // N x dim
};

/// Concatenated per-token targets h_i^multi, N x sum(dim).
struct MultiRep {
  std::vector<ComponentDescriptor> components;
  Tensor<float> targets;

  std::size_t tokens() const { return targets.rows(); }
  std::size_t dim() const { return targets.cols(); }
};

/// Canonical concatenation: components sorted by (model, variant, layer).
MultiRep concat_representations(std::vector<RepComponent> components);

/// sum_t q(t) phi_t.
template <typename S>
std::vector<S> expected_phi(std::span<const double> q_row, const Tensor<S>& phi);

/// All rows at once: N x D_Trs.
template <typename S>
Tensor<S> expected_phi(const lattice::AlignmentPosterior& q, const Tensor<S>& phi);

/// Adjoint of expected_phi: d_phi(t) += sum_i q_i(t) d_phibar(i).
template <typename S>
void expected_phi_backward(const lattice::AlignmentPosterior& q, const Tensor<S>& d_phibar,
                           Tensor<S>& d_phi);

/// R([acoustic; text]).
template <typename S>
std::vector<S> regress(const nn::RegressionParams<S>& r, std::span<const S> acoustic,
                       std::span<const S> text);

double distance(Distance d, std::span<const double> prediction, std::span<const float> target);

/// phibar: N x D_Trs, psi: N x D_Prd, targets: N x D_out.
template <typename S>
double kd_loss(const Tensor<S>& phibar, const Tensor<S>& psi, const Tensor<float>& targets,
               const nn::RegressionParams<S>& r, Distance d, bool normalize = false);

/// Expectation outside the distance: sum_i sum_t q_i(t) d(R(phi_t, psi_i), h_i).
template <typename S>
double kd_loss_exact(const lattice::AlignmentPosterior& q, const Tensor<S>& phi,
                     const Tensor<S>& psi, const Tensor<float>& targets,
                     const nn::RegressionParams<S>& r, Distance d, bool normalize = false);

/// kd_loss plus `scale` times its gradient accumulated into the regression
/// parameters and the phibar/psi adjoints. L1 uses subgradient 0 at ties.
template <typename S>
double kd_loss_and_grad(const Tensor<S>& phibar, const Tensor<S>& psi,
                        const Tensor<float>& targets, const nn::RegressionParams<S>& r,
                        Distance d, bool normalize, double scale,
                        nn::RegressionParams<S>& d_r, Tensor<S>& d_phibar, Tensor<S>& d_psi);

/// asr + lambda * kd. Negative lambda is a configuration error.
double combined_loss(double asr_nll, double kd, double lambda);

}  // namespace repkd::distill
