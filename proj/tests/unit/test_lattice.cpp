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

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "repkd/errors.hpp"
#include "repkd/lattice.hpp"

using namespace repkd;
using namespace repkd::lattice;

namespace {

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

}  // namespace

TEST_CASE("path count is C(T+N-1, N)") {
  for (std::size_t T = 1; T <= 6; ++T) {
    for (std::size_t N = 0; N <= 5; ++N) {
      const std::vector<int> y(N, 0);
      const auto paths = enumerate_paths(T, y, 1);
      CHECK(paths.size() == static_cast<std::size_t>(binomial(T + N - 1, N)));
      for (const auto& p : paths) {
        CHECK(p.steps.size() == T + N);
        CHECK(p.steps.back() == 1);  // every alignment ends with the final blank
      }
    }
  }
}

TEST_CASE("enumeration refuses long alignments") {
  const std::vector<int> y(7, 0);
  CHECK_THROWS_AS(enumerate_paths(8, y, 1), InvalidInput);
  CHECK(enumerate_paths(7, y, 1).size() == 1716);  // C(13, 7)
}

TEST_CASE("hand-worked two-frame, one-token lattice") {
  // Two classes with probability 1/2 everywhere: each of the two alignments
  // (y, blank, blank) and (blank, y, blank) has probability 1/8.
  JointLogProbGrid grid(2, 1, 2, 1);
  for (auto& v : grid.values()) v = std::log(0.5);
  const std::vector<int> y = {0};
  CHECK(transducer_nll(grid, y) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  const auto q = alignment_posterior(grid, y);
  CHECK(q(0, 0) == doctest::Approx(0.5));
  CHECK(q(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("single frame, no tokens: likelihood is the final blank") {
  JointLogProbGrid grid(1, 0, 3, 2);
  grid.at(0, 0, 0) = std::log(0.2);
  grid.at(0, 0, 1) = std::log(0.3);
  grid.at(0, 0, 2) = std::log(0.5);
  CHECK(transducer_nll(grid, std::vector<int>{}) == doctest::Approx(-std::log(0.5)));
}

TEST_CASE("forward-backward agrees with enumeration on random grids") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const std::size_t T = 1 + seed % 5, N = seed % 4, C = 3 + seed % 3;
    const auto grid = testing::random_grid(T, N, C, seed);
    const auto y = testing::random_tokens(N, C - 1, seed + 1000);
    CHECK(std::abs(transducer_nll(grid, y) - enumerated_nll(grid, y)) < 1e-10);

    const auto q = alignment_posterior(grid, y);
    const auto qe = enumerated_posterior(grid, y);
    REQUIRE(q.q.size() == qe.q.size());
    for (std::size_t k = 0; k < q.q.size(); ++k) CHECK(std::abs(q.q[k] - qe.q[k]) < 1e-10);
  }
}

TEST_CASE("alpha and beta give the same total") {
  const auto grid = testing::random_grid(5, 3, 4, 7);
  const auto y = testing::random_tokens(3, 3, 8);
  const auto ab = forward_backward(grid, y);
  CHECK(ab.log_likelihood == doctest::Approx(ab.beta(0, 0)).epsilon(1e-12));
}

TEST_CASE("posterior rows are distributions over frames") {
  const auto grid = testing::random_grid(6, 4, 5, 3);
  const auto y = testing::random_tokens(4, 4, 4);
  const auto q = alignment_posterior(grid, y);
  for (std::size_t i = 0; i < q.tokens; ++i) {
    double s = 0.0;
    for (double v : q.row(i)) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Token i cannot be emitted before token i-1.
  for (std::size_t i = 1; i < q.tokens; ++i) {
    double cdf_prev = 0.0, cdf = 0.0;
    for (std::size_t t = 0; t < q.frames; ++t) {
      cdf_prev += q(i - 1, t);
      cdf += q(i, t);
      CHECK(cdf <= cdf_prev + 1e-12);
    }
  }
}

TEST_CASE("transducer_grad matches central differences") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto grid = testing::random_grid(3 + seed % 3, 1 + seed % 3, 4, seed + 50);
    const auto y = testing::random_tokens(grid.tokens(), 3, seed + 60);
    const auto g = transducer_grad(grid, y);
    CHECK(g.nll == doctest::Approx(transducer_nll(grid, y)).epsilon(1e-12));
    const double h = 1e-6;
    for (std::size_t k = 0; k < grid.values().size(); ++k) {
      const double saved = grid.values()[k];
      grid.values()[k] = saved + h;
      const double up = transducer_nll(grid, y);
      grid.values()[k] = saved - h;
      const double down = transducer_nll(grid, y);
      grid.values()[k] = saved;
      CHECK(g.grad[k] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("gradient mass per row") {
  // Each alignment uses exactly T blanks and one emission per token, so the
  // gradient over blank entries sums to -T and over label entries to -N.
  const auto grid = testing::random_grid(5, 3, 4, 11);
  const auto y = testing::random_tokens(3, 3, 12);
  const auto g = transducer_grad(grid, y);
  double blanks = 0.0, labels = 0.0;
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t u = 0; u <= 3; ++u) {
      blanks += g.grad[grid.index(t, u, 3)];
      if (u < 3) labels += g.grad[grid.index(t, u, static_cast<std::size_t>(y[u]))];
    }
  }
  CHECK(blanks == doctest::Approx(-5.0));
  CHECK(labels == doctest::Approx(-3.0));
}

TEST_CASE("logit gradient sums to zero per cell") {
  const auto grid = testing::random_grid(4, 2, 5, 21);
  const auto y = testing::random_tokens(2, 4, 22);
  const auto g = transducer_grad(grid, y);
  const auto dl = logit_grad(grid, g.grad);
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t u = 0; u <= 2; ++u) {
      double s = 0.0;
      for (std::size_t k = 0; k < 5; ++k) s += dl[grid.index(t, u, k)];
      CHECK(std::abs(s) < 1e-12);
    }
  }
}

TEST_CASE("invalid inputs are rejected") {
  const auto grid = testing::random_grid(2, 2, 3, 1);
  CHECK_THROWS_AS(transducer_nll(grid, std::vector<int>{0}), Error);        // N mismatch
  CHECK_THROWS_AS(transducer_nll(grid, std::vector<int>{0, 2}), Error);     // blank as label
  CHECK_THROWS_AS(transducer_nll(grid, std::vector<int>{0, 7}), Error);     // out of range
  JointLogProbGrid dead(2, 1, 2, 1);
  for (auto& v : dead.values()) v = kNegInf;
  CHECK_THROWS_AS(transducer_nll(dead, std::vector<int>{0}), DegenerateModel);
}

TEST_CASE("log_add handles infinities") {
  CHECK(log_add(kNegInf, kNegInf) == kNegInf);
  CHECK(log_add(kNegInf, 1.5) == 1.5);
  CHECK(log_add(std::log(2.0), std::log(3.0)) == doctest::Approx(std::log(5.0)));
}
