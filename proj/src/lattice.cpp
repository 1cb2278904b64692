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

#include "repkd/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace repkd::lattice {

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

JointLogProbGrid::JointLogProbGrid(std::size_t frames, std::size_t tokens,
                                   std::size_t classes, std::size_t blank_index)
    : frames_(frames),
      tokens_(tokens),
      classes_(classes),
      blank_(blank_index),
      values_(frames * (tokens + 1) * classes, kNegInf) {
  if (blank_index >= classes) {
    throw ContractViolation("blank index " + std::to_string(blank_index) +
                            " outside " + std::to_string(classes) + " classes");
  }
}

double JointLogProbGrid::max_normalization_error() const {
  double worst = 0.0;
  for (std::size_t t = 0; t < frames_; ++t) {
    for (std::size_t u = 0; u <= tokens_; ++u) {
      worst = std::max(worst, std::abs(log_sum_exp(cell(t, u))));
    }
  }
  return worst;
}

void check_grid(const JointLogProbGrid& grid, std::span<const int> y) {
  if (grid.frames() == 0) throw InvalidInput("lattice has zero frames");
  if (y.size() != grid.tokens()) {
    throw ContractViolation("grid built for " + std::to_string(grid.tokens()) +
                            " tokens, got a sequence of " + std::to_string(y.size()));
  }
  if (grid.values().size() != grid.frames() * (grid.tokens() + 1) * grid.classes()) {
    throw ContractViolation("grid storage does not match its dimensions");
  }
  for (int tok : y) {
    if (tok < 0 || static_cast<std::size_t>(tok) >= grid.classes() ||
        static_cast<std::size_t>(tok) == grid.blank_index()) {
      throw ContractViolation("token id " + std::to_string(tok) +
                              " is not a label class of the grid");
    }
  }
}

LogGrid forward_alphas(const JointLogProbGrid& grid, std::span<const int> y) {
  check_grid(grid, y);
  const std::size_t T = grid.frames(), N = grid.tokens();
  LogGrid alpha(T, N + 1);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u <= N; ++u) {
      if (t == 0 && u == 0) {
        alpha(0, 0) = 0.0;
        continue;
      }
      double a = kNegInf;
      if (t > 0) a = alpha(t - 1, u) + grid.blank(t - 1, u);
      if (u > 0) a = log_add(a, alpha(t, u - 1) + grid.at(t, u - 1, y[u - 1]));
      alpha(t, u) = a;
    }
  }
  return alpha;
}

LogGrid backward_betas(const JointLogProbGrid& grid, std::span<const int> y) {
  check_grid(grid, y);
  const std::size_t T = grid.frames(), N = grid.tokens();
  LogGrid beta(T, N + 1);
  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t u = N + 1; u-- > 0;) {
      if (t == T - 1 && u == N) {
        beta(t, u) = grid.blank(t, u);
        continue;
      }
      double b = kNegInf;
      if (t + 1 < T) b = beta(t + 1, u) + grid.blank(t, u);
      if (u < N) b = log_add(b, beta(t, u + 1) + grid.at(t, u, y[u]));
      beta(t, u) = b;
    }
  }
  return beta;
}

double log_likelihood_from_alpha(const JointLogProbGrid& grid, const LogGrid& alpha) {
  const std::size_t T = grid.frames(), N = grid.tokens();
  return alpha(T - 1, N) + grid.blank(T - 1, N);
}

AlphaBetaGrids forward_backward(const JointLogProbGrid& grid, std::span<const int> y) {
  AlphaBetaGrids ab;
  ab.alpha = forward_alphas(grid, y);
  ab.beta = backward_betas(grid, y);
  ab.log_likelihood = log_likelihood_from_alpha(grid, ab.alpha);
  return ab;
}

namespace {
void require_finite_total(double ll) {
  if (!std::isfinite(ll)) {
    throw DegenerateModel("every alignment has zero probability (log p(y|X) = " +
                          std::to_string(ll) + ")");
  }
}
}  // namespace

double transducer_nll(const JointLogProbGrid& grid, std::span<const int> y) {
  const LogGrid alpha = forward_alphas(grid, y);
  const double ll = log_likelihood_from_alpha(grid, alpha);
  require_finite_total(ll);
  return -ll;
}

AlignmentPosterior alignment_posterior(const AlphaBetaGrids& ab,
                                       const JointLogProbGrid& grid,
                                       std::span<const int> y) {
  check_grid(grid, y);
  require_finite_total(ab.log_likelihood);
  const std::size_t T = grid.frames(), N = grid.tokens();
  AlignmentPosterior post;
  post.tokens = N;
  post.frames = T;
  post.q.assign(N * T, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    double sum = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double lp = ab.alpha(t, i) + grid.at(t, i, y[i]) + ab.beta(t, i + 1) -
                        ab.log_likelihood;
      const double p = lp == kNegInf ? 0.0 : std::exp(lp);
      post.q[i * T + t] = p;
      sum += p;
    }
    if (!(sum > 0.0)) {
      throw DegenerateModel("token " + std::to_string(i) + " has no emitting frame");
    }
    for (std::size_t t = 0; t < T; ++t) post.q[i * T + t] /= sum;
  }
  return post;
}

AlignmentPosterior alignment_posterior(const JointLogProbGrid& grid, std::span<const int> y) {
  return alignment_posterior(forward_backward(grid, y), grid, y);
}

NllAndGrad transducer_grad(const JointLogProbGrid& grid, std::span<const int> y) {
  const AlphaBetaGrids ab = forward_backward(grid, y);
  require_finite_total(ab.log_likelihood);
  const std::size_t T = grid.frames(), N = grid.tokens();
  const double ll = ab.log_likelihood;
  NllAndGrad out;
  out.nll = -ll;
  out.grad.assign(grid.values().size(), 0.0);
  // d(-ll)/d lp(t,u,k) = -exp(alpha(t,u) + lp + beta(next) - ll) for each
  // transition that uses the entry.
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u <= N; ++u) {
      const double a = ab.alpha(t, u);
      if (a == kNegInf) continue;
      const double next_blank =
          (t + 1 < T) ? ab.beta(t + 1, u) : (u == N ? 0.0 : kNegInf);
      if (next_blank != kNegInf) {
        const double lp = a + grid.blank(t, u) + next_blank - ll;
        if (lp != kNegInf) out.grad[grid.index(t, u, grid.blank_index())] = -std::exp(lp);
      }
      if (u < N) {
        const double b = ab.beta(t, u + 1);
        if (b != kNegInf) {
          const double lp = a + grid.at(t, u, y[u]) + b - ll;
          if (lp != kNegInf) out.grad[grid.index(t, u, y[u])] = -std::exp(lp);
        }
      }
    }
  }
  return out;
}

std::vector<double> logit_grad(const JointLogProbGrid& grid,
                               std::span<const double> logprob_grad) {
  if (logprob_grad.size() != grid.values().size()) {
    throw ContractViolation("gradient shape does not match the grid");
  }
  std::vector<double> out(logprob_grad.size(), 0.0);
  const std::size_t C = grid.classes();
  for (std::size_t base = 0; base < out.size(); base += C) {
    double total = 0.0;
    for (std::size_t k = 0; k < C; ++k) total += logprob_grad[base + k];
    for (std::size_t k = 0; k < C; ++k) {
      const double p = std::exp(grid.values()[base + k]);
      out[base + k] = logprob_grad[base + k] - p * total;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {
void enumerate_rec(std::size_t blanks_left, std::size_t labels_left,
                   std::span<const int> y, int blank, std::vector<int>& cur,
                   std::vector<AlignmentPath>& out) {
  if (blanks_left == 0 && labels_left == 0) {
    out.push_back({cur});
    return;
  }
  const std::size_t emitted = y.size() - labels_left;
  if (labels_left > 0) {
    cur.push_back(y[emitted]);
    enumerate_rec(blanks_left, labels_left - 1, y, blank, cur, out);
    cur.pop_back();
  }
  // The final blank may only be taken once all labels are out.
  if (blanks_left > 1 || (blanks_left == 1 && labels_left == 0)) {
    cur.push_back(blank);
    enumerate_rec(blanks_left - 1, labels_left, y, blank, cur, out);
    cur.pop_back();
  }
}
}  // namespace

std::vector<AlignmentPath> enumerate_paths(std::size_t frames, std::span<const int> y,
                                           int blank) {
  if (frames + y.size() > kMaxEnumerationLength) {
    throw InvalidInput("refusing to enumerate alignments with T + N = " +
                       std::to_string(frames + y.size()) + " > " +
                       std::to_string(kMaxEnumerationLength));
  }
  if (frames == 0) throw InvalidInput("enumeration needs at least one frame");
  std::vector<AlignmentPath> out;
  std::vector<int> cur;
  enumerate_rec(frames, y.size(), y, blank, cur, out);
  return out;
}

double path_log_prob(const JointLogProbGrid& grid, std::span<const int> y,
                     const AlignmentPath& path) {
  std::size_t t = 0, u = 0;
  double lp = 0.0;
  for (int step : path.steps) {
    if (t >= grid.frames()) return kNegInf;
    if (static_cast<std::size_t>(step) == grid.blank_index()) {
      lp += grid.blank(t, u);
      ++t;
    } else {
      if (u >= y.size() || step != y[u]) return kNegInf;
      lp += grid.at(t, u, step);
      ++u;
    }
  }
  return (t == grid.frames() && u == y.size()) ? lp : kNegInf;
}

double enumerated_nll(const JointLogProbGrid& grid, std::span<const int> y) {
  const auto paths = enumerate_paths(grid.frames(), y, static_cast<int>(grid.blank_index()));
  std::vector<double> lps;
  lps.reserve(paths.size());
  for (const auto& p : paths) lps.push_back(path_log_prob(grid, y, p));
  return -log_sum_exp(lps);
}

AlignmentPosterior enumerated_posterior(const JointLogProbGrid& grid, std::span<const int> y) {
  const std::size_t T = grid.frames(), N = y.size();
  const int blank = static_cast<int>(grid.blank_index());
  const auto paths = enumerate_paths(T, y, blank);
  std::vector<double> lps;
  for (const auto& p : paths) lps.push_back(path_log_prob(grid, y, p));
  const double total = log_sum_exp(lps);
  AlignmentPosterior post;
  post.tokens = N;
  post.frames = T;
  post.q.assign(N * T, 0.0);
  for (std::size_t k = 0; k < paths.size(); ++k) {
    const double w = std::exp(lps[k] - total);
    std::size_t t = 0, u = 0;
    for (int step : paths[k].steps) {
      if (step == blank) {
        ++t;
      } else {
        post.q[u * T + t] += w;
        ++u;
      }
    }
  }
  return post;
}

}  // namespace repkd::lattice
