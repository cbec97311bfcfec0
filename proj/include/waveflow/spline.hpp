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

// Knot vectors and the four spline families used by the flow:
//   B  Cox-de Boor B-splines (partition of unity)
//   M  B-splines rescaled to unit integral
//   I  integrated M-splines, monotone from 0 to 1
//   O  B-splines symmetrically orthonormalized under the L2 inner product
//
// `order` is the number of coefficients per polynomial piece (degree + 1).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "waveflow/autodiff.hpp"
#include "waveflow/errors.hpp"
#include "waveflow/rng.hpp"

namespace waveflow {

inline constexpr int kMaxOrder = 12;

enum class Family { B, M, I, O };

class KnotVector {
 public:
  KnotVector(std::vector<double> knots, int order);

  int order() const noexcept { return order_; }
  int n_basis() const noexcept { return static_cast<int>(knots_.size()) - order_; }
  double lower() const noexcept { return knots_.front(); }
  double upper() const noexcept { return knots_.back(); }
  const std::vector<double>& knots() const noexcept { return knots_; }
  double operator[](int i) const { return knots_[static_cast<std::size_t>(i)]; }

  bool contains(double x) const noexcept { return x >= lower() && x <= upper(); }
  /// Index s with t_s <= x < t_{s+1}, in [order-1, n_basis-1]; the right end maps to the last span.
  int find_span(double x) const;
  bool is_interior_knot(double x) const;

  /// Same breakpoints, order + 1, one extra knot at each end.
  KnotVector raised() const;

 private:
  std::vector<double> knots_;
  int order_;
};

/// Clamped knot vector with equidistant interior knots on [a, b].
KnotVector make_clamped_knots(int n_basis, int order, double a, double b);

/// The `order` basis functions that can be nonzero on one knot span.
struct LocalBasis {
  int first = 0;
  int count = 0;
  /// d[m][j]: m-th derivative of basis function `first + j`.
  std::array<std::array<double, kMaxOrder + 1>, 5> d{};
};

/// Nonzero B-splines at x (inside the knot range) with derivatives up to `n_derivs` (<= 4).
LocalBasis local_bspline(const KnotVector& knots, double x, int n_derivs);

/// All basis values (or derivatives) of the B or M family at x; zeros outside [a, b].
Eigen::VectorXd eval_basis(Family family, const KnotVector& knots, double x, int derivative_order);
/// All I-spline values (or derivatives) at x; zeros outside [a, b].
Eigen::VectorXd eval_ispline_basis(const KnotVector& knots, double x, int derivative_order);

/// G_ij = integral of B_i B_j, by (order+1)-point Gauss-Legendre per span.
Eigen::MatrixXd gram_matrix(const KnotVector& knots);

struct OrthoBasis {
  /// Column j holds the B-spline coefficients of O_j.
  Eigen::MatrixXd change_matrix;
  Eigen::MatrixXd gram;
  /// Squared norms of the orthogonalized vectors before the final rescale.
  Eigen::VectorXd sq_norms;
};

/// Symmetric pairwise orthogonalization: vector i is paired with vector N-1-i,
/// each pair is Gram-Schmidt'ed against the earlier pairs and then Lowdin-rotated.
OrthoBasis lowdin_orthogonalize(const Eigen::MatrixXd& gram);

enum class WeightMode { Simplex, UnitSphere, Raw };

struct WeightVector {
  Eigen::VectorXd weights;
  WeightMode mode = WeightMode::Raw;
};

WeightVector normalize_simplex(const Eigen::VectorXd& raw, double eps_regularize);
WeightVector normalize_sphere(const Eigen::VectorXd& raw);

/// softmax(raw), floored by eps and renormalized.
template <class S>
void softmax_regularized(std::span<const S> raw, double eps, std::span<S> out) {
  double top = ad::primal(raw[0]);
  for (const S& r : raw) top = std::max(top, ad::primal(r));
  S total(0.0);
  for (std::size_t j = 0; j < raw.size(); ++j) {
    using std::exp;
    out[j] = exp(raw[j] - top);
    total = total + out[j];
  }
  const S inv = S(1.0) / total;
  const double scale = 1.0 / (1.0 + static_cast<double>(raw.size()) * eps);
  for (std::size_t j = 0; j < raw.size(); ++j) out[j] = (out[j] * inv + eps) * scale;
}

/// raw / ||raw||.
template <class S>
void sphere_normalize(std::span<const S> raw, std::span<S> out) {
  S sq(0.0);
  for (const S& r : raw) sq = sq + r * r;
  if (!(ad::primal(sq) > 0.0)) throw DegenerateWeights("sphere normalization of an all-zero vector");
  using std::sqrt;
  const S inv = S(1.0) / sqrt(sq);
  for (std::size_t j = 0; j < raw.size(); ++j) out[j] = raw[j] * inv;
}

/// A knot vector with every per-basis quantity precomputed once.
class SplineSpace {
 public:
  explicit SplineSpace(KnotVector knots);

  const KnotVector& knots() const noexcept { return knots_; }
  int order() const noexcept { return knots_.order(); }
  int n_basis() const noexcept { return knots_.n_basis(); }
  double lower() const noexcept { return knots_.lower(); }
  double upper() const noexcept { return knots_.upper(); }

  const Eigen::MatrixXd& gram() const noexcept { return ortho_.gram; }
  const OrthoBasis& ortho() const noexcept { return ortho_; }
  double m_scale(int i) const { return m_scale_[i]; }
  /// max_x M_i(x) for every basis function.
  const Eigen::VectorXd& m_basis_max() const noexcept { return m_max_; }
  /// Upper bound of any simplex-weighted M-curve.
  double mspline_bound() const noexcept { return order() * m_max_.maxCoeff(); }

  LocalBasis local_b(double x, int n_derivs) const { return local_bspline(knots_, x, n_derivs); }
  LocalBasis local_m(double x, int n_derivs) const;
  /// Entries: I_i and its derivatives (M_i, M_i', ...). I_i = 1 for i < first.
  LocalBasis local_i(double x, int n_derivs) const;

  /// Highest derivative order that is continuous across interior knots.
  int continuity(Family family) const noexcept {
    return family == Family::I ? order() - 1 : order() - 2;
  }

  /// sum_i w_i F_i(x) for F in {B, M, I}; zero outside [a, b].
  template <class S, class W>
  S curve(Family family, std::span<const W> w, const S& x) const;

  /// Swaps in a different basis change matrix (test fixtures only).
  void override_ortho(OrthoBasis ortho) { ortho_ = std::move(ortho); }

 private:
  KnotVector knots_;
  KnotVector raised_;
  std::vector<double> m_scale_;
  OrthoBasis ortho_;
  Eigen::VectorXd m_max_;
};

template <class S, class W>
S SplineSpace::curve(Family family, std::span<const W> w, const S& x) const {
  const double xp = ad::primal(x);
  if (!knots_.contains(xp)) return S(0.0);
  if constexpr (ad::derivative_depth<S> >= 2) {
    if (continuity(family) < 2 && knots_.is_interior_knot(xp))
      throw NonSmoothPoint("second derivative requested at a knot of a spline that is not C2");
  }
  constexpr int nd = ad::derivative_depth<S> < 3 ? ad::derivative_depth<S> : 3;
  const LocalBasis lb = family == Family::I   ? local_i(xp, nd)
                        : family == Family::M ? local_m(xp, nd)
                                              : local_b(xp, nd);
  S acc(0.0);
  if (family == Family::I) {
    for (int i = 0; i < lb.first; ++i) acc = acc + w[static_cast<std::size_t>(i)];
  }
  for (int j = 0; j < lb.count; ++j) {
    const ad::Derivs f{lb.d[0][j], lb.d[1][j], lb.d[2][j], lb.d[3][j]};
    acc = acc + ad::apply(x, f) * w[static_cast<std::size_t>(lb.first + j)];
  }
  return acc;
}

/// A weighted curve of one family on a shared spline space.
class SplineCurve {
 public:
  SplineCurve(Family family, std::shared_ptr<const SplineSpace> space, WeightVector weights);

  Family family() const noexcept { return family_; }
  const SplineSpace& space() const noexcept { return *space_; }
  const WeightVector& weights() const noexcept { return weights_; }
  /// B-spline coefficients of the curve (O curves: change_matrix * beta).
  const Eigen::VectorXd& bspline_coefficients() const noexcept { return coeffs_; }

  double operator()(double x) const;
  /// Family-dependent precomputed upper bound (M: of the curve, O: of its square).
  double precomputed_max_bound() const noexcept { return bound_; }

 private:
  Family family_;
  std::shared_ptr<const SplineSpace> space_;
  WeightVector weights_;
  Eigen::VectorXd coeffs_;
  double bound_ = 0.0;
};

/// order * max_i max_x M_i(x); bounds every simplex-weighted M-curve.
double mspline_max_bound(const SplineCurve& curve);
/// max_i a_i^2 over the B-coefficients a of the curve; bounds O_beta(x)^2.
double ospline_sq_max_bound(const SplineCurve& curve);

inline constexpr long kMaxRejections = 1'000'000;

/// One exact draw from density/integral(density) on [a, b], uniform proposals.
template <class F>
double rejection_sample(F&& density, double bound, double a, double b, Rng& rng) {
  if (!(bound > 0.0)) throw PathologicalDensity("rejection bound must be positive");
  for (long attempt = 0; attempt < kMaxRejections; ++attempt) {
    const double x = a + (b - a) * uniform01(rng);
    const double u = uniform01(rng);
    if (u * bound < density(x)) return x;
  }
  throw PathologicalDensity("more than 1e6 consecutive rejections");
}

}  // namespace waveflow
