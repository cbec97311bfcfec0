// Copyright 2026 The Waveflow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <numbers>
#include <utility>

#include <Eigen/Core>

namespace waveflow {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;

  explicit GaussLegendre(int n) : nodes(n), weights(n) {
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p1 = 1.0;
        double p2 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
        }
        dp = n * (z * p1 - p2) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-15) break;
      }
      nodes[i] = -z;
      nodes[n - 1 - i] = z;
      weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }

  int size() const { return static_cast<int>(nodes.size()); }

  /// Node and weight mapped onto [a, b].
  std::pair<double, double> mapped(int i, double a, double b) const {
    const double half = 0.5 * (b - a);
    return {a + half * (nodes[i] + 1.0), half * weights[i]};
  }
};

/// Composite Gauss-Legendre rule: `panels` equal panels of `rule.size()` nodes.
template <class F>
double integrate(F&& f, double a, double b, int panels, const GaussLegendre& rule) {
  const double width = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double hi = (p + 1 == panels) ? b : lo + width;
    for (int i = 0; i < rule.size(); ++i) {
      const auto [x, w] = rule.mapped(i, lo, hi);
      total += w * f(x);
    }
  }
  return total;
}

}  // namespace waveflow
