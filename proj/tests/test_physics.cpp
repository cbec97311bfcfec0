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

#include <cmath>
#include <numbers>
#include <random>

#include "waveflow/oracle.hpp"
#include "waveflow/physics.hpp"

using namespace waveflow;

namespace {

WaveflowModel random_model(int n, CoordinateChoice coord, double L, std::uint64_t seed) {
  FlowConfig f;
  f.n_dims = n;
  f.hidden_width = 12;
  f.seed = seed;
  WaveflowModel m(SquareFlow(f), BoxGeometry{L}, coord);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (double& p : m.mutable_flow().mutable_params()) p += 0.1 * nd(rng);
  return m;
}

}  // namespace

TEST_CASE("relative coordinates by hand") {
  const std::vector<double> x = {-1.0, 1.0};
  double log_det = 0.0;
  const auto uf = to_relative<double>(CoordinateChoice::First, x, 5.0, log_det);
  CHECK(uf[0] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(uf[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(std::exp(log_det) == doctest::Approx(1.0 / 10 * 1.0 / 6).epsilon(1e-14));

  const auto um = to_relative<double>(CoordinateChoice::Mean, x, 5.0, log_det);
  CHECK(um[0] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(um[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::exp(log_det) == doctest::Approx(1.0 / 10 * 1.0 / 8).epsilon(1e-14));

  const std::vector<double> u = {0.4, 1.0 / 3.0};
  const auto back = from_relative(CoordinateChoice::First, u, 5.0);
  CHECK(back[0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(back[1] == doctest::Approx(1.0).epsilon(1e-14));

  const std::vector<double> wall = {-5.0, 2.0, 3.0};
  CHECK(to_relative<double>(CoordinateChoice::First, wall, 5.0, log_det)[0] == 0.0);

  for (CoordinateChoice c : {CoordinateChoice::First, CoordinateChoice::Mean}) {
    for (int n = 1; n <= 4; ++n) {
      const std::vector<double> half(static_cast<std::size_t>(n), 0.5);
      const auto in = from_relative(c, half, 5.0);
      for (std::size_t i = 0; i < in.size(); ++i) {
        CHECK(std::abs(in[i]) < 5.0);
        if (i > 0) CHECK(in[i] > in[i - 1]);
      }
    }
  }
  const std::vector<double> unsorted = {1.0, -1.0};
  CHECK_THROWS_AS(to_relative<double>(CoordinateChoice::Mean, unsorted, 5.0, log_det), DomainError);
  const std::vector<double> outside = {-6.0, 1.0};
  CHECK_THROWS_AS(to_relative<double>(CoordinateChoice::Mean, outside, 5.0, log_det), DomainError);
}

TEST_CASE("sort parity") {
  const std::vector<double> a = {3.0, 1.0, 2.0};
  std::vector<double> sorted;
  CHECK(sort_parity(a, &sorted) == 1);
  CHECK(sorted == std::vector<double>{1.0, 2.0, 3.0});
  const std::vector<double> b = {2.0, 1.0};
  CHECK(sort_parity(b, nullptr) == -1);
  const std::vector<double> c = {1.0, 4.0, 1.0};
  CHECK(sort_parity(c, nullptr) == 0);
}

TEST_CASE("antisymmetric wavefunction") {
  for (CoordinateChoice coord : {CoordinateChoice::First, CoordinateChoice::Mean}) {
    const WaveflowModel m = random_model(2, coord, 10.0, 3);
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
      const double a = -10 + 20 * uniform01(rng);
      const double b = -10 + 20 * uniform01(rng);
      const double ab[2] = {a, b};
      const double ba[2] = {b, a};
      const double aa[2] = {a, a};
      CHECK(m.psi(ab).value == -m.psi(ba).value);
      CHECK(m.psi(aa).value == 0.0);
    }
    const WaveflowModel m3 = random_model(3, coord, 10.0, 4);
    const double x[3] = {-2.0, 0.5, 4.0};
    const double cyc[3] = {4.0, -2.0, 0.5};
    CHECK(m3.psi(cyc).value == m3.psi(x).value);
    CHECK(m3.psi(x).value != 0.0);
    const double outside[2] = {0.0, 11.0};
    CHECK_THROWS_AS(m.psi(outside), DomainError);
  }
}

TEST_CASE("model samples are sorted and inside the box") {
  const WaveflowModel m = random_model(3, CoordinateChoice::Mean, 4.0, 5);
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const auto x = m.sample(rng);
    CHECK(x.size() == 3);
    CHECK((x[0] <= x[1] && x[1] <= x[2]));
    CHECK((x[0] >= -4.0 && x[2] <= 4.0));
  }
}

TEST_CASE("potentials") {
  HamiltonianSpec helium;
  const double origin[2] = {0.0, 0.0};
  CHECK(potential(helium, origin) == doctest::Approx(-3.0).epsilon(1e-15));
  const double far[2] = {10.0, 10.0};
  CHECK(potential(helium, far) == doctest::Approx(1.0 - 4.0 / std::sqrt(101.0)).epsilon(1e-15));
  CHECK(potential(helium, far) == doctest::Approx(0.6020).epsilon(1e-4));
  const double split[2] = {-1.0, 2.0};
  CHECK(potential(helium, split) ==
        doctest::Approx(-2.0 / std::sqrt(2.0) - 2.0 / std::sqrt(5.0) + 1.0 / std::sqrt(10.0)).epsilon(1e-15));

  HamiltonianSpec box;
  box.kind = HamiltonianKind::FreeBox;
  CHECK(potential(box, split) == 0.0);

  HamiltonianSpec osc;
  osc.kind = HamiltonianKind::Custom;
  osc.n_particles = 1;
  osc.omega = 2.0;
  osc.interaction = 0.0;
  const double one[1] = {0.5};
  CHECK(potential(osc, one) == doctest::Approx(0.5 * 4.0 * 0.25));
}

TEST_CASE("local energy of analytic box states") {
  using J = ad::Taylor2<double>;
  Rng rng(6);
  const double L = 5.0;
  const double e1 = std::numbers::pi * std::numbers::pi / (2 * 100.0);
  CHECK(box_ground_energy(L) == doctest::Approx(e1));
  CHECK(box_two_fermion_energy(L) == doctest::Approx(0.246740).epsilon(1e-5));
  for (int i = 0; i < 100; ++i) {
    const double x[2] = {-L + 2 * L * uniform01(rng), -L + 2 * L * uniform01(rng)};
    if (std::abs(x[0] - x[1]) < 1e-3) continue;
    const auto two =
        local_energy_jets<double>([&](std::span<const J> xs) { return box_two_fermion_log<J>(L, xs); }, x, 0.0);
    CHECK(std::abs(two.energy / box_two_fermion_energy(L) - 1.0) < 1e-8);
    const auto one = local_energy_jets<double>([&](std::span<const J> xs) { return box_ground_log<J>(L, xs); },
                                               std::span<const double>(x, 1), 0.0);
    CHECK(std::abs(one.energy / e1 - 1.0) < 1e-8);
  }
  const double node[2] = {1.0, 1.0};
  CHECK_THROWS_AS(
      local_energy_jets<double>([&](std::span<const J> xs) { return box_two_fermion_log<J>(L, xs); }, node, 0.0),
      NodeProximity);
}

TEST_CASE("model local energy against a finite-difference laplacian") {
  HamiltonianSpec helium;
  const WaveflowModel m = random_model(2, CoordinateChoice::Mean, 10.0, 9);
  Rng rng(10);
  const double h = 1e-3;
  for (int t = 0; t < 20; ++t) {
    const auto x = m.sample(rng);
    if (x[1] - x[0] < 0.1 || std::abs(x[0]) > 9.9 || std::abs(x[1]) > 9.9) continue;
    const double psi = m.psi(x).value;
    double lap = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      auto at = [&](double dx) {
        std::vector<double> y = x;
        y[i] += dx;
        return m.psi(y).value;
      };
      lap += (-at(2 * h) + 16 * at(h) - 30 * psi + 16 * at(-h) - at(-2 * h)) / (12 * h * h);
    }
    const double fd = -0.5 * lap / psi + potential(helium, x);
    const double el = local_energy(m, helium, x);
    CHECK(std::abs(el - fd) <= 1e-5 * std::max(1.0, std::abs(el)));
  }
}

TEST_CASE("configuration names") {
  CHECK(parse_coordinate_choice("x_M") == CoordinateChoice::Mean);
  CHECK(parse_coordinate_choice("first") == CoordinateChoice::First);
  CHECK(parse_hamiltonian_kind(to_string(HamiltonianKind::FreeBox)) == HamiltonianKind::FreeBox);
  CHECK_THROWS_AS(parse_coordinate_choice("middle"), InvalidConfiguration);
}
