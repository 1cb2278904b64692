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

#include "repkd/distill.hpp"

#include <algorithm>
#include <cmath>

namespace repkd::distill {

Distance parse_distance(const std::string& name) {
  if (name == "l1") return Distance::kL1;
  if (name == "l2sq" || name == "l2") return Distance::kL2Squared;
  throw InvalidConfig("unknown distance '" + name + "' (expected l1 or l2sq)");
}

std::string to_string(Distance d) { return d == Distance::kL1 ? "l1" : "l2sq"; }

MultiRep concat_representations(std::vector<RepComponent> components) {
  if (components.empty()) throw ContractViolation("no representation components to concatenate");
  std::stable_sort(components.begin(), components.end(),
                   [](const RepComponent& a, const RepComponent& b) { return a.key < b.key; });
  const std::size_t N = components.front().values.rows();
  std::size_t total = 0;
  for (std::size_t i = 0; i < components.size(); ++i) {
    const auto& c = components[i];
    if (c.values.rank() != 2 || c.values.rows() != N) {
      throw ContractViolation("component (" + c.key.model + ", variant " +
                              std::to_string(c.key.variant) + ", layer " +
                              std::to_string(c.key.layer) + ") has " +
                              std::to_string(c.values.rows()) + " rows, expected " +
                              std::to_string(N));
    }
    if (i > 0 && components[i - 1].key == c.key) {
      throw ContractViolation("duplicate representation component for model " + c.key.model);
    }
    total += c.values.cols();
  }
  MultiRep rep;
  rep.targets = Tensor<float>::matrix(N, total);
  std::size_t offset = 0;
  for (const auto& c : components) {
    const std::size_t dim = c.values.cols();
    rep.components.push_back({c.key, dim, offset});
    for (std::size_t i = 0; i < N; ++i) {
      std::copy(c.values.row(i).begin(), c.values.row(i).end(), rep.targets.row(i).begin() + offset);
    }
    offset += dim;
  }
  return rep;
}

template <typename S>
std::vector<S> expected_phi(std::span<const double> q_row, const Tensor<S>& phi) {
  if (q_row.size() != phi.rows()) {
    throw ContractViolation("posterior row has " + std::to_string(q_row.size()) +
                            " frames, features have " + std::to_string(phi.rows()));
  }
  std::vector<double> acc(phi.cols(), 0.0);
  for (std::size_t t = 0; t < phi.rows(); ++t) {
    if (q_row[t] == 0.0) continue;
    const auto row = phi.row(t);
    for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += q_row[t] * static_cast<double>(row[d]);
  }
  return std::vector<S>(acc.begin(), acc.end());
}

template <typename S>
Tensor<S> expected_phi(const lattice::AlignmentPosterior& q, const Tensor<S>& phi) {
  Tensor<S> out = Tensor<S>::matrix(q.tokens, phi.cols());
  for (std::size_t i = 0; i < q.tokens; ++i) {
    const auto v = expected_phi(q.row(i), phi);
    std::copy(v.begin(), v.end(), out.row(i).begin());
  }
  return out;
}

template <typename S>
void expected_phi_backward(const lattice::AlignmentPosterior& q, const Tensor<S>& d_phibar,
                           Tensor<S>& d_phi) {
  if (d_phibar.rows() != q.tokens || d_phi.rows() != q.frames || d_phi.cols() != d_phibar.cols()) {
    throw ContractViolation("expected_phi adjoint shapes do not match the posterior");
  }
  for (std::size_t i = 0; i < q.tokens; ++i) {
    for (std::size_t t = 0; t < q.frames; ++t) {
      const S w = static_cast<S>(q(i, t));
      if (w == S(0)) continue;
      auto dst = d_phi.row(t);
      const auto src = d_phibar.row(i);
      for (std::size_t d = 0; d < dst.size(); ++d) dst[d] += w * src[d];
    }
  }
}

template <typename S>
std::vector<S> regress(const nn::RegressionParams<S>& r, std::span<const S> acoustic,
                       std::span<const S> text) {
  if (r.empty()) throw ContractViolation("regression head is not initialized");
  if (acoustic.size() + text.size() != r.weight.cols()) {
    throw ContractViolation("regression input has dimension " +
                            std::to_string(acoustic.size() + text.size()) + ", expected " +
                            std::to_string(r.weight.cols()));
  }
  std::vector<S> out(r.bias.flat().begin(), r.bias.flat().end());
  const std::size_t in = r.weight.cols(), split = acoustic.size();
  for (std::size_t o = 0; o < out.size(); ++o) {
    const S* w = r.weight.data() + o * in;
    S acc = 0;
    for (std::size_t j = 0; j < split; ++j) acc += w[j] * acoustic[j];
    for (std::size_t j = 0; j < text.size(); ++j) acc += w[split + j] * text[j];
    out[o] += acc;
  }
  return out;
}

double distance(Distance d, std::span<const double> prediction, std::span<const float> target) {
  if (prediction.size() != target.size()) {
    throw ContractViolation("prediction has dimension " + std::to_string(prediction.size()) +
                            ", target has " + std::to_string(target.size()));
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < prediction.size(); ++k) {
    const double diff = prediction[k] - static_cast<double>(target[k]);
    acc += d == Distance::kL1 ? std::abs(diff) : diff * diff;
  }
  return acc;
}

namespace {

template <typename S>
void check_kd_shapes(const Tensor<S>& acoustic_rows, const Tensor<S>& psi,
                     const Tensor<float>& targets, const nn::RegressionParams<S>& r,
                     std::size_t tokens) {
  if (r.empty()) throw ContractViolation("regression head is not initialized");
  if (psi.rows() != tokens || targets.rows() != tokens) {
    throw ContractViolation("distillation inputs disagree on the token count");
  }
  if (r.output_dim() != targets.cols()) {
    throw ContractViolation("regression output dimension " + std::to_string(r.output_dim()) +
                            " does not match target dimension " +
                            std::to_string(targets.cols()));
  }
  if (acoustic_rows.cols() + psi.cols() != r.weight.cols()) {
    throw ContractViolation("regression input dimension mismatch");
  }
}

template <typename S>
double token_distance(const nn::RegressionParams<S>& r, std::span<const S> acoustic,
                      std::span<const S> text, std::span<const float> target, Distance d) {
  const auto pred = regress(r, acoustic, text);
  std::vector<double> p(pred.begin(), pred.end());
  return distance(d, p, target);
}

}  // namespace

template <typename S>
double kd_loss(const Tensor<S>& phibar, const Tensor<S>& psi, const Tensor<float>& targets,
               const nn::RegressionParams<S>& r, Distance d, bool normalize) {
  const std::size_t N = phibar.rows();
  check_kd_shapes(phibar, psi, targets, r, N);
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    total += token_distance(r, phibar.row(i), psi.row(i), targets.row(i), d);
  }
  return (normalize && N > 0) ? total / static_cast<double>(N) : total;
}

template <typename S>
double kd_loss_exact(const lattice::AlignmentPosterior& q, const Tensor<S>& phi,
                     const Tensor<S>& psi, const Tensor<float>& targets,
                     const nn::RegressionParams<S>& r, Distance d, bool normalize) {
  const std::size_t N = q.tokens;
  if (phi.rows() != q.frames) throw ContractViolation("posterior and features disagree on T");
  check_kd_shapes(phi, psi, targets, r, N);
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t t = 0; t < q.frames; ++t) {
      if (q(i, t) == 0.0) continue;
      total += q(i, t) * token_distance(r, phi.row(t), psi.row(i), targets.row(i), d);
    }
  }
  return (normalize && N > 0) ? total / static_cast<double>(N) : total;
}

template <typename S>
double kd_loss_and_grad(const Tensor<S>& phibar, const Tensor<S>& psi,
                        const Tensor<float>& targets, const nn::RegressionParams<S>& r,
                        Distance d, bool normalize, double scale,
                        nn::RegressionParams<S>& d_r, Tensor<S>& d_phibar, Tensor<S>& d_psi) {
  const std::size_t N = phibar.rows();
  check_kd_shapes(phibar, psi, targets, r, N);
  const std::size_t split = phibar.cols(), in = r.weight.cols(), D = r.output_dim();
  const double norm = (normalize && N > 0) ? 1.0 / static_cast<double>(N) : 1.0;
  double total = 0.0;
  std::vector<S> g(D);
  for (std::size_t i = 0; i < N; ++i) {
    const auto pred = regress(r, phibar.row(i), psi.row(i));
    const auto target = targets.row(i);
    for (std::size_t k = 0; k < D; ++k) {
      const double diff = static_cast<double>(pred[k]) - static_cast<double>(target[k]);
      double gk;
      if (d == Distance::kL1) {
        total += std::abs(diff);
        gk = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      } else {
        total += diff * diff;
        gk = 2.0 * diff;
      }
      g[k] = static_cast<S>(gk * norm * scale);
    }
    auto dpb = d_phibar.row(i);
    auto dps = d_psi.row(i);
    const auto a = phibar.row(i);
    const auto b = psi.row(i);
    for (std::size_t k = 0; k < D; ++k) {
      const S gk = g[k];
      if (gk == S(0)) continue;
      d_r.bias[k] += gk;
      S* dw = d_r.weight.data() + k * in;
      const S* w = r.weight.data() + k * in;
      for (std::size_t j = 0; j < split; ++j) {
        dw[j] += gk * a[j];
        dpb[j] += gk * w[j];
      }
      for (std::size_t j = 0; j < b.size(); ++j) {
        dw[split + j] += gk * b[j];
        dps[j] += gk * w[split + j];
      }
    }
  }
  return total * norm;
}

double combined_loss(double asr_nll, double kd, double lambda) {
  if (!(lambda >= 0.0)) {
    throw InvalidConfig("distillation weight must be non-negative, got " + std::to_string(lambda));
  }
  return asr_nll + lambda * kd;
}

#define REPKD_INSTANTIATE_DISTILL(S)                                                           \
  template std::vector<S> expected_phi(std::span<const double>, const Tensor<S>&);             \
  template Tensor<S> expected_phi(const lattice::AlignmentPosterior&, const Tensor<S>&);       \
  template void expected_phi_backward(const lattice::AlignmentPosterior&, const Tensor<S>&,    \
                                      Tensor<S>&);                                             \
  template std::vector<S> regress(const nn::RegressionParams<S>&, std::span<const S>,          \
                                  std::span<const S>);                                         \
  template double kd_loss(const Tensor<S>&, const Tensor<S>&, const Tensor<float>&,            \
                          const nn::RegressionParams<S>&, Distance, bool);                     \
  template double kd_loss_exact(const lattice::AlignmentPosterior&, const Tensor<S>&,          \
                                const Tensor<S>&, const Tensor<float>&,                        \
                                const nn::RegressionParams<S>&, Distance, bool);               \
  template double kd_loss_and_grad(const Tensor<S>&, const Tensor<S>&, const Tensor<float>&,   \
                                   const nn::RegressionParams<S>&, Distance, bool, double,     \
                                   nn::RegressionParams<S>&, Tensor<S>&, Tensor<S>&);

REPKD_INSTANTIATE_DISTILL(float)
REPKD_INSTANTIATE_DISTILL(double)

#undef REPKD_INSTANTIATE_DISTILL

}  // namespace repkd::distill
