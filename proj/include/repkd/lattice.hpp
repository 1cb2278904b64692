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

// Transducer alignment lattice in log space.
//
// Indices are 0-based: frame t in [0, T), emitted-count u in [0, N]. A label
// transition from (t, u) emits y[u] and stays on frame t; a blank from (t, u)
// moves to frame t + 1. Every alignment ends with the blank at (T-1, N).
//
//   alpha(0, 0)   = 0
//   alpha(t, u)   = logadd(alpha(t-1, u) + blank(t-1, u),
//                          alpha(t, u-1) + label(t, u-1, y[u-1]))
//   log p(y | X)  = alpha(T-1, N) + blank(T-1, N)
//
// All accumulation is double precision regardless of the model's scalar type.

#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "repkd/errors.hpp"

namespace repkd::lattice {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow; -inf is the identity.
double log_add(double a, double b);

/// log-sum-exp over a span; -inf for an empty or all -inf span.
double log_sum_exp(std::span<const double> v);

/// Joint log-probabilities of shape frames x (tokens + 1) x classes.
class JointLogProbGrid {
 public:
  JointLogProbGrid() = default;
  JointLogProbGrid(std::size_t frames, std::size_t tokens, std::size_t classes,
                   std::size_t blank_index);

  std::size_t frames() const { return frames_; }
  std::size_t tokens() const { return tokens_; }
  std::size_t classes() const { return classes_; }
  std::size_t blank_index() const { return blank_; }

  double& at(std::size_t t, std::size_t u, std::size_t k) {
    return values_[index(t, u, k)];
  }
  double at(std::size_t t, std::size_t u, std::size_t k) const {
    return values_[index(t, u, k)];
  }
  double blank(std::size_t t, std::size_t u) const { return at(t, u, blank_); }

  std::span<double> cell(std::size_t t, std::size_t u) {
    return std::span<double>(values_).subspan(index(t, u, 0), classes_);
  }
  std::span<const double> cell(std::size_t t, std::size_t u) const {
    return std::span<const double>(values_).subspan(index(t, u, 0), classes_);
  }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  std::size_t index(std::size_t t, std::size_t u, std::size_t k) const {
    return (t * (tokens_ + 1) + u) * classes_ + k;
  }

  /// Largest |logsumexp(cell)| over all cells.
  double max_normalization_error() const;

 private:
  std::size_t frames_ = 0;
  std::size_t tokens_ = 0;
  std::size_t classes_ = 0;
  std::size_t blank_ = 0;
  std::vector<double> values_;
};

/// frames x (tokens + 1) matrix of log-probabilities.
struct LogGrid {
  std::size_t frames = 0;
  std::size_t states = 0;
  std::vector<double> values;

  LogGrid() = default;
  LogGrid(std::size_t t, std::size_t s) : frames(t), states(s), values(t * s, kNegInf) {}
  double& operator()(std::size_t t, std::size_t u) { return values[t * states + u]; }
  double operator()(std::size_t t, std::size_t u) const { return values[t * states + u]; }
};

struct AlphaBetaGrids {
  LogGrid alpha;
  LogGrid beta;
  double log_likelihood = kNegInf;  // from the alpha side
};

/// q[i][t]: probability that token i (0-based) is emitted while on frame t.
struct AlignmentPosterior {
  std::size_t tokens = 0;
  std::size_t frames = 0;
  std::vector<double> q;  // tokens x frames, row-major
  bool frozen = false;

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(q).subspan(i * frames, frames);
  }
  double operator()(std::size_t i, std::size_t t) const { return q[i * frames + t]; }
};

/// Throws ContractViolation/InvalidInput if `y` does not fit the grid.
void check_grid(const JointLogProbGrid& grid, std::span<const int> y);

LogGrid forward_alphas(const JointLogProbGrid& grid, std::span<const int> y);
LogGrid backward_betas(const JointLogProbGrid& grid, std::span<const int> y);

/// alpha(T-1, N) + blank(T-1, N).
double log_likelihood_from_alpha(const JointLogProbGrid& grid, const LogGrid& alpha);

AlphaBetaGrids forward_backward(const JointLogProbGrid& grid, std::span<const int> y);

/// -log p(y | X). Throws DegenerateModel when every alignment has zero probability.
double transducer_nll(const JointLogProbGrid& grid, std::span<const int> y);

AlignmentPosterior alignment_posterior(const AlphaBetaGrids& ab,
                                       const JointLogProbGrid& grid,
                                       std::span<const int> y);
AlignmentPosterior alignment_posterior(const JointLogProbGrid& grid, std::span<const int> y);

struct NllAndGrad {
  double nll = 0.0;
  std::vector<double> grad;  // d nll / d log-prob, shaped like grid.values()
};

/// Gradient of the NLL with respect to every log-probability entry.
/// Unreachable cells get exactly zero.
NllAndGrad transducer_grad(const JointLogProbGrid& grid, std::span<const int> y);

/// Composes a log-prob gradient with log-softmax: the gradient with respect
/// to the unnormalized logits that produced `grid`.
std::vector<double> logit_grad(const JointLogProbGrid& grid, std::span<const double> logprob_grad);

// ---------------------------------------------------------------------------
// Brute-force oracles. Exponential in T + N; used by tests and acceptance.

/// One alignment, length T + N; entries are class ids, blanks included.
struct AlignmentPath {
  std::vector<int> steps;
};

inline constexpr std::size_t kMaxEnumerationLength = 14;

/// Every monotone alignment for T frames and the tokens `y`. Refuses T + N > 14.
std::vector<AlignmentPath> enumerate_paths(std::size_t frames, std::span<const int> y,
                                           int blank);

double path_log_prob(const JointLogProbGrid& grid, std::span<const int> y,
                     const AlignmentPath& path);

/// -logsumexp over enumerated paths.
double enumerated_nll(const JointLogProbGrid& grid, std::span<const int> y);

/// Posterior by summing path probabilities where y_i is emitted on frame t.
AlignmentPosterior enumerated_posterior(const JointLogProbGrid& grid, std::span<const int> y);

}  // namespace repkd::lattice
