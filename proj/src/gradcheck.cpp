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

#include "repkd/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "repkd/errors.hpp"

namespace repkd::gradcheck {

double Report::max_error() const {
  double m = 0.0;
  for (const auto& t : tensors) m = std::max(m, t.error);
  return m;
}

const TensorError& Report::worst() const {
  if (tensors.empty()) throw ContractViolation("empty gradient-check report");
  return *std::max_element(tensors.begin(), tensors.end(),
                           [](const auto& a, const auto& b) { return a.error < b.error; });
}

namespace {
double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}
}  // namespace

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) throw ContractViolation("gradient sizes differ");
  std::vector<double> diff(analytic.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = analytic[i] - numeric[i];
  const double scale = std::max(norm(analytic), norm(numeric));
  return scale < 1e-10 ? norm(diff) : norm(diff) / scale;
}

template <typename S>
Report check(const nn::Model<double>& model, const LossFn& loss, const nn::Model<S>& analytic,
             double h) {
  nn::Model<double> probe = model;
  std::vector<std::pair<std::string, std::vector<double>>> given;
  analytic.visit([&](const std::string& name, const Tensor<S>& t) {
    given.emplace_back(name, std::vector<double>(t.flat().begin(), t.flat().end()));
  });
  Report report;
  std::size_t k = 0;
  probe.visit([&](const std::string& name, Tensor<double>& t) {
    if (k >= given.size() || given[k].first != name || given[k].second.size() != t.size()) {
      throw ContractViolation("analytic gradient layout differs at " + name);
    }
    std::vector<double> numeric(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + h;
      const double up = loss(probe);
      t[i] = saved - h;
      const double down = loss(probe);
      t[i] = saved;
      numeric[i] = (up - down) / (2.0 * h);
    }
    TensorError e;
    e.name = name;
    e.error = relative_error(given[k].second, numeric);
    e.analytic_norm = norm(given[k].second);
    e.numeric_norm = norm(numeric);
    report.tensors.push_back(e);
    ++k;
  });
  return report;
}

template Report check(const nn::Model<double>&, const LossFn&, const nn::Model<float>&, double);
template Report check(const nn::Model<double>&, const LossFn&, const nn::Model<double>&, double);

}  // namespace repkd::gradcheck
