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
#include <limits>

#include <Eigen/Eigenvalues>

#include "waveflow/quadrature.hpp"
#include "waveflow/spline.hpp"

using namespace waveflow;

namespace {

KnotVector default_knots() { return make_clamped_knots(18, 5, 0.0, 1.0); }

}  // namespace

TEST_CASE("clamped knots") {
  const KnotVector bern = make_clamped_knots(3, 3, 0.0, 1.0);
  CHECK(bern.knots() == std::vector<double>{0, 0, 0, 1, 1, 1});

  const KnotVector k = default_knots();
  REQUIRE(k.knots().size() == 23);
  int spans = 0;
  for (std::size_t i = 0; i + 1 < k.knots().size(); ++i) {
    const double w = k.knots()[i + 1] - k.knots()[i];
    if (w > 0.0) {
      CHECK(w == doctest::Approx(1.0 / 14.0).epsilon(1e-14));
      ++spans;
    }
  }
  CHECK(spans == 14);

  CHECK_THROWS_AS(make_clamped_knots(2, 5, 0.0, 1.0), InvalidConfiguration);
  CHECK_THROWS_AS(KnotVector({0.0, 0.5, 0.4, 1.0}, 1), InvalidConfiguration);
}

TEST_CASE("basis base cases") {
  const KnotVector step({0.0, 0.5, 1.0}, 1);
  const Eigen::VectorXd b = eval_basis(Family::B, step, 0.25, 0);
  CHECK(b[0] == 1.0);
  CHECK(b[1] == 0.0);
  const Eigen::VectorXd m = eval_basis(Family::M, step, 0.25, 0);
  CHECK(m[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(m[1] == 0.0);

  const KnotVector bern({0, 0, 0, 1, 1, 1}, 3);
  const Eigen::VectorXd q = eval_basis(Family::B, bern, 0.5, 0);
  CHECK(q[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(q[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(q[2] == doctest::Approx(0.25).epsilon(1e-15));
  // Bernstein closed form away from the midpoint, with derivatives.
  const double x = 0.3;
  const Eigen::VectorXd d1 = eval_basis(Family::B, bern, x, 1);
  CHECK(d1[0] == doctest::Approx(-2 * (1 - x)).epsilon(1e-14));
  CHECK(d1[1] == doctest::Approx(2 - 4 * x).epsilon(1e-14));
  CHECK(d1[2] == doctest::Approx(2 * x).epsilon(1e-14));

  CHECK(eval_basis(Family::B, bern, 1.5, 0).isZero(0.0));
}

TEST_CASE("I-spline endpoints and derivative") {
  const KnotVector k = default_knots();
  CHECK(eval_ispline_basis(k, 0.0, 0).isZero(0.0));
  CHECK((eval_ispline_basis(k, 1.0, 0).array() - 1.0).abs().maxCoeff() < 1e-14);
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const double x = uniform01(rng);
    const Eigen::VectorXd di = eval_ispline_basis(k, x, 1);
    const Eigen::VectorXd m = eval_basis(Family::M, k, x, 0);
    CHECK((di - m).cwiseAbs().maxCoeff() <= 1e-12);
  }
  // Monotone: I-curves never decrease.
  const Eigen::VectorXd w = normalize_simplex(Eigen::VectorXd::LinSpaced(18, -2, 3), 0.0).weights;
  double prev = -1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double v = eval_ispline_basis(k, i / 1000.0, 0).dot(w);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("gram matrix") {
  const Eigen::MatrixXd g1 = gram_matrix(KnotVector({0.0, 0.5, 1.0}, 1));
  CHECK(g1(0, 0) == doctest::Approx(0.5));
  CHECK(g1(1, 1) == doctest::Approx(0.5));
  CHECK(g1(0, 1) == 0.0);

  const Eigen::MatrixXd g = gram_matrix(default_knots());
  CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  CHECK(es.eigenvalues().minCoeff() > 0.0);

  // Independent check of one entry with a fine composite rule.
  const KnotVector k = default_knots();
  const double g34 = integrate(
      [&](double x) {
        const Eigen::VectorXd b = eval_basis(Family::B, k, x, 0);
        return b[3] * b[4];
      },
      0.0, 1.0, 14 * 8, GaussLegendre(6));
  CHECK(g(3, 4) == doctest::Approx(g34).epsilon(1e-13));
}

TEST_CASE("lowdin orthogonalization") {
  const OrthoBasis id = lowdin_orthogonalize(Eigen::MatrixXd::Identity(5, 5));
  CHECK((id.change_matrix - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-15);

  Eigen::Matrix2d s;
  s << 1.0, 0.5, 0.5, 1.0;
  const OrthoBasis two = lowdin_orthogonalize(s);
  const Eigen::MatrixXd d = two.change_matrix.transpose() * s * two.change_matrix - Eigen::Matrix2d::Identity();
  CHECK(d.cwiseAbs().maxCoeff() < 1e-12);
  // Symmetric treatment: both vectors keep the same overlap with their original.
  const Eigen::MatrixXd overlap = s * two.change_matrix;
  CHECK(overlap(0, 0) == doctest::Approx(overlap(1, 1)).epsilon(1e-14));

  // Default-size basis, checked with an independent quadrature of all pairwise integrals.
  const SplineSpace sp(default_knots());
  const Eigen::MatrixXd& c = sp.ortho().change_matrix;
  Eigen::MatrixXd ip = Eigen::MatrixXd::Zero(18, 18);
  const GaussLegendre rule(10);
  for (int p = 0; p < 14 * 4; ++p) {
    for (int q = 0; q < rule.size(); ++q) {
      const auto [x, w] = rule.mapped(q, p / 56.0, (p + 1) / 56.0);
      const Eigen::VectorXd o = c.transpose() * eval_basis(Family::B, sp.knots(), x, 0);
      ip.noalias() += w * o * o.transpose();
    }
  }
  CHECK((ip - Eigen::MatrixXd::Identity(18, 18)).cwiseAbs().maxCoeff() < 1e-8);

  Eigen::Matrix2d singular;
  singular << 1.0, 1.0, 1.0, 1.0;
  CHECK_THROWS_AS(lowdin_orthogonalize(singular), NumericalFailure);
}

TEST_CASE("M-curve bound") {
  auto sp = std::make_shared<const SplineSpace>(default_knots());
  const SplineCurve single(Family::M, sp, WeightVector{Eigen::VectorXd::Unit(18, 0), WeightMode::Simplex});
  const double bound = mspline_max_bound(single);
  CHECK(bound == doctest::Approx(5.0 * sp->m_basis_max().maxCoeff()));
  const SplineCurve uniform(Family::M, sp, WeightVector{Eigen::VectorXd::Constant(18, 1.0 / 18), WeightMode::Simplex});
  double grid_max = 0.0;
  double m0_max = 0.0;
  const Eigen::VectorXd& w = uniform.weights().weights;
  for (int i = 0; i < 100000; ++i) {
    const double x = i / 99999.0;
    const Eigen::VectorXd m = eval_basis(Family::M, sp->knots(), x, 0);
    grid_max = std::max(grid_max, m.dot(w));
    m0_max = std::max(m0_max, m[0]);
  }
  CHECK(bound >= m0_max);
  CHECK(mspline_max_bound(uniform) >= grid_max);
  // The per-basis maxima are exact up to the Newton refinement.
  CHECK(sp->m_basis_max()[0] == doctest::Approx(m0_max).epsilon(1e-9));
}

TEST_CASE("O-curve squared bound") {
  auto sp = std::make_shared<const SplineSpace>(default_knots());
  const Eigen::VectorXd e0 = Eigen::VectorXd::Unit(18, 0);
  const SplineCurve c0(Family::O, sp, WeightVector{e0, WeightMode::UnitSphere});
  const double expected = sp->ortho().change_matrix.col(0).array().square().maxCoeff();
  CHECK(ospline_sq_max_bound(c0) == doctest::Approx(expected).epsilon(1e-15));
  const SplineCurve neg(Family::O, sp, WeightVector{-e0, WeightMode::UnitSphere});
  CHECK(ospline_sq_max_bound(neg) == ospline_sq_max_bound(c0));
}

TEST_CASE("rejection sampling") {
  Rng a(11);
  Rng b(11);
  const double x = rejection_sample([](double) { return 1.0; }, 1.0, 0.0, 1.0, a);
  CHECK(x == uniform01(b));
  CHECK_THROWS_AS(rejection_sample([](double) { return 1.0; }, 0.0, 0.0, 1.0, a), PathologicalDensity);
  CHECK_THROWS_AS(rejection_sample([](double) { return 0.0; }, 1.0, 0.0, 1.0, a), PathologicalDensity);
}

TEST_CASE("simplex and sphere normalization") {
  const WeightVector u = normalize_simplex(Eigen::VectorXd::Constant(7, 0.3), 0.0);
  CHECK((u.weights.array() - 1.0 / 7).abs().maxCoeff() < 1e-15);

  Eigen::VectorXd raw = Eigen::VectorXd::Constant(10, -1e6);
  raw[0] = 0.0;
  const WeightVector f = normalize_simplex(raw, 1e-4);
  CHECK(f.weights.minCoeff() >= 9.99e-5);
  CHECK(f.weights.minCoeff() == doctest::Approx(1e-4 / 1.001).epsilon(1e-12));

  Rng rng(3);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd r(12);
    for (auto& v : r) v = 5 * nd(rng);
    CHECK(std::abs(normalize_simplex(r, 1e-4).weights.sum() - 1.0) < 1e-12);
    const Eigen::VectorXd s1 = normalize_sphere(r).weights;
    const Eigen::VectorXd s2 = normalize_sphere(-r).weights;
    CHECK((s1 + s2).cwiseAbs().maxCoeff() == 0.0);
  }

  const Eigen::VectorXd s = normalize_sphere(Eigen::Vector2d(3, 4)).weights;
  CHECK(s[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(s[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK_THROWS_AS(normalize_sphere(Eigen::Vector2d(0, 0)), DegenerateWeights);
}
