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

#include <doctest.h>

#include <random>

#include "waveflow/conditioner.hpp"

using namespace waveflow;

namespace {

std::vector<Head> heads() {
  return {Head{"theta", 4, {0.1, 0.2, 0.3, 0.4}}, Head{"prior", 3, {}}};
}

std::vector<double> run(const MaskedNet& net, const std::vector<double>& params, std::vector<double> x) {
  return forward<double, double>(net, params, x);
}

void scramble(std::vector<double>& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (double& p : params) p += 0.7 * nd(rng);
}

}  // namespace

TEST_CASE("one dimension has no conditioning inputs") {
  std::vector<double> params;
  const MaskedNet net = build_masked_net(1, 8, 1, heads(), 5, &params);
  scramble(params, 1);
  const auto a = run(net, params, {0.1});
  const auto b = run(net, params, {0.9});
  CHECK(a == b);
}

TEST_CASE("autoregressive masking") {
  std::vector<double> params;
  const MaskedNet net = build_masked_net(2, 16, 2, heads(), 5, &params);
  scramble(params, 2);
  const auto a = run(net, params, {0.3, 0.1});
  const auto b = run(net, params, {0.3, 0.8});
  CHECK(a == b);
  const auto c = run(net, params, {0.6, 0.1});
  bool dim1_changed = false;
  for (int o = 0; o < net.n_outputs(); ++o) {
    if (net.output_dim(o) == 0) CHECK(c[static_cast<std::size_t>(o)] == a[static_cast<std::size_t>(o)]);
    else dim1_changed = dim1_changed || c[static_cast<std::size_t>(o)] != a[static_cast<std::size_t>(o)];
  }
  CHECK(dim1_changed);
}

TEST_CASE("mask product is strictly lower triangular per dimension") {
  for (int n_hidden : {1, 2, 3}) {
    std::vector<double> params;
    const MaskedNet net = build_masked_net(4, 12, n_hidden, heads(), 3, &params);
    const Eigen::MatrixXd conn = net.connectivity();
    REQUIRE(conn.rows() == net.n_outputs());
    REQUIRE(conn.cols() == 4);
    for (int o = 0; o < net.n_outputs(); ++o) {
      for (int j = 0; j < 4; ++j) {
        if (j >= net.output_dim(o)) CHECK(conn(o, j) == 0.0);
        else CHECK(conn(o, j) > 0.0);
      }
    }
  }
}

TEST_CASE("fresh network outputs the head initialization") {
  std::vector<double> params;
  const MaskedNet net = build_masked_net(3, 16, 1, heads(), 9, &params);
  CHECK(params.size() == net.n_params());
  for (const std::vector<double>& x : {std::vector<double>{0.0, 0.5, 1.0}, std::vector<double>{0.9, 0.2, 0.4}}) {
    const auto out = run(net, params, x);
    for (int d = 0; d < 3; ++d) {
      for (int j = 0; j < 4; ++j) CHECK(out[static_cast<std::size_t>(net.output_index(d, 0, j))] == doctest::Approx(0.1 * (j + 1)).epsilon(1e-15));
      for (int j = 0; j < 3; ++j) CHECK(out[static_cast<std::size_t>(net.output_index(d, 1, j))] == 0.0);
    }
  }
}

TEST_CASE("finite-difference Jacobian vanishes exactly on masked entries") {
  std::vector<double> params;
  const MaskedNet net = build_masked_net(3, 10, 1, heads(), 4, &params);
  scramble(params, 3);
  const std::vector<double> x = {0.2, 0.5, 0.7};
  const double h = 1e-5;
  for (int j = 0; j < 3; ++j) {
    std::vector<double> xp = x;
    std::vector<double> xm = x;
    xp[static_cast<std::size_t>(j)] += h;
    xm[static_cast<std::size_t>(j)] -= h;
    const auto op = run(net, params, xp);
    const auto om = run(net, params, xm);
    for (int o = 0; o < net.n_outputs(); ++o) {
      const double fd = (op[static_cast<std::size_t>(o)] - om[static_cast<std::size_t>(o)]) / (2 * h);
      if (j >= net.output_dim(o)) CHECK(fd == 0.0);
    }
  }
}

TEST_CASE("invalid shapes") {
  std::vector<double> params;
  CHECK_THROWS_AS(build_masked_net(0, 8, 1, heads(), 1, &params), InvalidConfiguration);
  CHECK_THROWS_AS(build_masked_net(2, 0, 1, heads(), 1, &params), InvalidConfiguration);
}
