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

#include "waveflow/spline.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "waveflow/quadrature.hpp"

namespace waveflow {

KnotVector::KnotVector(std::vector<double> knots, int order) : knots_(std::move(knots)), order_(order) {
  if (order_ < 1 || order_ > kMaxOrder)
    throw InvalidConfiguration("spline order must lie in [1, " + std::to_string(kMaxOrder) + "]");
  if (static_cast<int>(knots_.size()) < 2 * order_)
    throw InvalidConfiguration("knot vector too short for its order");
  if (!std::is_sorted(knots_.begin(), knots_.end()))
    throw InvalidConfiguration("knots must be non-decreasing");
  if (!(knots_.front() < knots_.back())) throw InvalidConfiguration("knot interval must satisfy a < b");
  for (int i = 0; i < order_; ++i) {
    if (knots_[static_cast<std::size_t>(i)] != knots_.front() ||
        knots_[knots_.size() - 1 - static_cast<std::size_t>(i)] != knots_.back())
      throw InvalidConfiguration("knot vector must be clamped at both ends");
  }
}

int KnotVector::find_span(double x) const {
  const int n = n_basis();
  if (x >= upper()) return n - 1;
  // Largest s with t_s <= x, restricted to the valid span range.
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  const int s = static_cast<int>(it - knots_.begin()) - 1;
  return std::clamp(s, order_ - 1, n - 1);
}

bool KnotVector::is_interior_knot(double x) const {
  if (x <= lower() || x >= upper()) return false;
  return std::binary_search(knots_.begin(), knots_.end(), x);
}

KnotVector KnotVector::raised() const {
  std::vector<double> t;
  t.reserve(knots_.size() + 2);
  t.push_back(lower());
  t.insert(t.end(), knots_.begin(), knots_.end());
  t.push_back(upper());
  return KnotVector(std::move(t), order_ + 1);
}

KnotVector make_clamped_knots(int n_basis, int order, double a, double b) {
  if (order < 1) throw InvalidConfiguration("spline order must be positive");
  if (n_basis < order) throw InvalidConfiguration("n_basis must be at least the spline order");
  if (!(b > a)) throw InvalidConfiguration("interval must satisfy b > a");
  const int spans = n_basis - order + 1;
  std::vector<double> t;
  t.reserve(static_cast<std::size_t>(n_basis + order));
  for (int i = 0; i < order; ++i) t.push_back(a);
  for (int i = 1; i < spans; ++i) t.push_back(a + (b - a) * i / spans);
  for (int i = 0; i < order; ++i) t.push_back(b);
  return KnotVector(std::move(t), order);
}

LocalBasis local_bspline(const KnotVector& knots, double x, int n_derivs) {
  // Derivatives of the nonzero basis functions (de Boor / Piegl-Tiller).
  const int p = knots.order() - 1;
  const int s = knots.find_span(x);
  LocalBasis out;
  out.first = s - p;
  out.count = p + 1;
  const int nd = std::min({n_derivs, 4, p});

  double ndu[kMaxOrder][kMaxOrder];
  double left[kMaxOrder];
  double right[kMaxOrder];
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - knots[s + 1 - j];
    right[j] = knots[s + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }
  for (int j = 0; j <= p; ++j) out.d[0][j] = ndu[j][p];

  double a[2][kMaxOrder];
  for (int r = 0; r <= p; ++r) {
    int s1 = 0;
    int s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= nd; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      out.d[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= nd; ++k) {
    for (int j = 0; j <= p; ++j) out.d[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] *= factor;
    factor *= (p - k);
  }
  return out;
}

namespace {

void check_derivative_order(int d) {
  if (d < 0) throw InvalidConfiguration("derivative order must be non-negative");
}

LocalBasis local_mspline(const KnotVector& knots, double x, int n_derivs) {
  LocalBasis lb = local_bspline(knots, x, n_derivs);
  const int k = knots.order();
  for (int j = 0; j < lb.count; ++j) {
    const int i = lb.first + j;
    const double scale = k / (knots[i + k] - knots[i]);
    for (auto& row : lb.d) row[static_cast<std::size_t>(j)] *= scale;
  }
  return lb;
}

LocalBasis local_ispline(const KnotVector& knots, const KnotVector& raised, double x, int n_derivs) {
  const int k = knots.order();
  LocalBasis out;
  if (n_derivs >= 1) {
    const LocalBasis m = local_mspline(knots, x, n_derivs - 1);
    for (int d = 1; d <= std::min(n_derivs, 4); ++d) out.d[static_cast<std::size_t>(d)] = m.d[static_cast<std::size_t>(d - 1)];
  }
  // I_i(x) = sum_{j > i} B_{j,k+1}(x) on the raised knot vector.
  const LocalBasis up = local_bspline(raised, x, 0);
  const int s = knots.find_span(x);
  out.first = s - k + 1;
  out.count = k;
  double tail = 0.0;
  for (int q = k - 1; q >= 0; --q) {
    tail += up.d[0][static_cast<std::size_t>(q + 1)];
    out.d[0][static_cast<std::size_t>(q)] = tail;
  }
  return out;
}

}  // namespace

Eigen::VectorXd eval_basis(Family family, const KnotVector& knots, double x, int derivative_order) {
  check_derivative_order(derivative_order);
  if (family != Family::B && family != Family::M)
    throw InvalidConfiguration("eval_basis supports the B and M families");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(knots.n_basis());
  if (!knots.contains(x) || derivative_order > 4 || derivative_order >= knots.order()) return out;
  const LocalBasis lb = family == Family::B ? local_bspline(knots, x, derivative_order)
                                            : local_mspline(knots, x, derivative_order);
  for (int j = 0; j < lb.count; ++j)
    out[lb.first + j] = lb.d[static_cast<std::size_t>(derivative_order)][static_cast<std::size_t>(j)];
  return out;
}

Eigen::VectorXd eval_ispline_basis(const KnotVector& knots, double x, int derivative_order) {
  check_derivative_order(derivative_order);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(knots.n_basis());
  if (!knots.contains(x) || derivative_order > 4 || derivative_order > knots.order()) return out;
  const LocalBasis lb = local_ispline(knots, knots.raised(), x, derivative_order);
  if (derivative_order == 0) {
    for (int i = 0; i < lb.first; ++i) out[i] = 1.0;
  }
  for (int j = 0; j < lb.count; ++j)
    out[lb.first + j] = lb.d[static_cast<std::size_t>(derivative_order)][static_cast<std::size_t>(j)];
  return out;
}

Eigen::MatrixXd gram_matrix(const KnotVector& knots) {
  const int n = knots.n_basis();
  const int k = knots.order();
  const GaussLegendre rule(k + 1);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for (int s = k - 1; s < n; ++s) {
    const double lo = knots[s];
    const double hi = knots[s + 1];
    if (!(hi > lo)) continue;
    for (int q = 0; q < rule.size(); ++q) {
      const auto [x, w] = rule.mapped(q, lo, hi);
      const LocalBasis lb = local_bspline(knots, x, 0);
      for (int i = 0; i < lb.count; ++i)
        for (int j = 0; j < lb.count; ++j) g(lb.first + i, lb.first + j) += w * lb.d[0][i] * lb.d[0][j];
    }
  }
  // Exactly symmetric.
  return 0.5 * (g + g.transpose());
}

OrthoBasis lowdin_orthogonalize(const Eigen::MatrixXd& gram) {
  const Eigen::Index n = gram.rows();
  if (gram.cols() != n || n == 0) throw NumericalFailure("gram matrix must be square and non-empty");
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw NumericalFailure("gram matrix is not positive definite");

  auto inner = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& v) { return u.dot(gram * v); };
  // Gram-Schmidt of `order` (indices into the identity columns) under the gram inner product.
  auto orthonormalize = [&](const std::vector<Eigen::Index>& order) {
    Eigen::MatrixXd q(n, static_cast<Eigen::Index>(order.size()));
    for (std::size_t c = 0; c < order.size(); ++c) {
      Eigen::VectorXd v = Eigen::VectorXd::Unit(n, order[c]);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t p = 0; p < c; ++p) {
          const auto col = q.col(static_cast<Eigen::Index>(p));
          v -= inner(col, v) * col;
        }
      }
      const double norm2 = inner(v, v);
      if (!(norm2 > 1e-300)) throw NumericalFailure("vectors are linearly dependent under the gram matrix");
      q.col(static_cast<Eigen::Index>(c)) = v / std::sqrt(norm2);
    }
    return q;
  };

  const Eigen::Index pairs = n / 2;
  std::vector<Eigen::Index> left_order;
  std::vector<Eigen::Index> right_order;
  for (Eigen::Index i = 0; i < pairs; ++i) {
    left_order.push_back(i);
    left_order.push_back(n - 1 - i);
    right_order.push_back(n - 1 - i);
    right_order.push_back(i);
  }
  if (n % 2 == 1) left_order.push_back(pairs);

  const Eigen::MatrixXd a_left = orthonormalize(left_order);
  const Eigen::MatrixXd a_right = right_order.empty() ? Eigen::MatrixXd() : orthonormalize(right_order);

  Eigen::MatrixXd change(n, n);
  if (n % 2 == 1) change.col(pairs) = a_left.col(n - 1);
  for (Eigen::Index i = 0; i < pairs; ++i) {
    const Eigen::VectorXd v1 = a_left.col(2 * i);
    const Eigen::VectorXd v2 = a_right.col(2 * i);
    const double s = inner(v1, v2);
    if (!(std::abs(s) < 1.0 - 1e-14)) throw NumericalFailure("paired vectors are parallel");
    // Symmetric two-vector rotation; orthonormal inputs (s = 0) are a fixed point.
    const Eigen::VectorXd plus = (v1 + v2) / std::sqrt(2.0 * (1.0 + s));
    const Eigen::VectorXd minus = (v1 - v2) / std::sqrt(2.0 * (1.0 - s));
    change.col(i) = (plus + minus) / std::sqrt(2.0);
    change.col(n - 1 - i) = (plus - minus) / std::sqrt(2.0);
  }

  OrthoBasis out;
  out.gram = gram;
  out.sq_norms = (change.transpose() * gram * change).diagonal();
  for (Eigen::Index j = 0; j < n; ++j) change.col(j) /= std::sqrt(out.sq_norms[j]);
  out.change_matrix = std::move(change);
  return out;
}

WeightVector normalize_simplex(const Eigen::VectorXd& raw, double eps_regularize) {
  if (!raw.allFinite()) throw DomainError("simplex normalization needs finite inputs");
  WeightVector w;
  w.mode = WeightMode::Simplex;
  w.weights.resize(raw.size());
  softmax_regularized<double>(std::span<const double>(raw.data(), static_cast<std::size_t>(raw.size())),
                              eps_regularize,
                              std::span<double>(w.weights.data(), static_cast<std::size_t>(raw.size())));
  return w;
}

WeightVector normalize_sphere(const Eigen::VectorXd& raw) {
  WeightVector w;
  w.mode = WeightMode::UnitSphere;
  w.weights.resize(raw.size());
  sphere_normalize<double>(std::span<const double>(raw.data(), static_cast<std::size_t>(raw.size())),
                           std::span<double>(w.weights.data(), static_cast<std::size_t>(raw.size())));
  return w;
}

SplineSpace::SplineSpace(KnotVector knots) : knots_(std::move(knots)), raised_(knots_.raised()) {
  const int n = knots_.n_basis();
  const int k = knots_.order();
  m_scale_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) m_scale_[static_cast<std::size_t>(i)] = k / (knots_[i + k] - knots_[i]);
  ortho_ = lowdin_orthogonalize(gram_matrix(knots_));

  // Per-basis maxima: dense grid, then Newton on M_i' = 0.
  constexpr int kGrid = 4096;
  m_max_ = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd arg = Eigen::VectorXd::Constant(n, lower());
  for (int g = 0; g <= kGrid; ++g) {
    const double x = lower() + (upper() - lower()) * g / kGrid;
    const LocalBasis lb = local_m(x, 0);
    for (int j = 0; j < lb.count; ++j) {
      if (lb.d[0][j] > m_max_[lb.first + j]) {
        m_max_[lb.first + j] = lb.d[0][j];
        arg[lb.first + j] = x;
      }
    }
  }
  if (k >= 3) {
    for (int i = 0; i < n; ++i) {
      const double lo = std::max(lower(), knots_[i]);
      const double hi = std::min(upper(), knots_[i + k]);
      double x = arg[i];
      for (int step = 0; step < 3; ++step) {
        const Eigen::VectorXd d1 = eval_basis(Family::M, knots_, x, 1);
        const Eigen::VectorXd d2 = eval_basis(Family::M, knots_, x, 2);
        if (!(d2[i] < 0.0)) break;
        x = std::clamp(x - d1[i] / d2[i], lo, hi);
        m_max_[i] = std::max(m_max_[i], eval_basis(Family::M, knots_, x, 0)[i]);
      }
    }
  }
}

LocalBasis SplineSpace::local_m(double x, int n_derivs) const {
  LocalBasis lb = local_bspline(knots_, x, n_derivs);
  for (int j = 0; j < lb.count; ++j) {
    const double scale = m_scale_[static_cast<std::size_t>(lb.first + j)];
    for (auto& row : lb.d) row[static_cast<std::size_t>(j)] *= scale;
  }
  return lb;
}

LocalBasis SplineSpace::local_i(double x, int n_derivs) const {
  return local_ispline(knots_, raised_, x, n_derivs);
}

SplineCurve::SplineCurve(Family family, std::shared_ptr<const SplineSpace> space, WeightVector weights)
    : family_(family), space_(std::move(space)), weights_(std::move(weights)) {
  if (weights_.weights.size() != space_->n_basis())
    throw InvalidConfiguration("weight count does not match the basis size");
  switch (family_) {
    case Family::O:
      coeffs_ = space_->ortho().change_matrix * weights_.weights;
      bound_ = coeffs_.cwiseAbs2().maxCoeff();
      break;
    case Family::M:
      coeffs_ = weights_.weights;
      bound_ = space_->mspline_bound();
      break;
    default:
      coeffs_ = weights_.weights;
      bound_ = coeffs_.cwiseAbs().maxCoeff();
      break;
  }
}

double SplineCurve::operator()(double x) const {
  const std::span<const double> w(coeffs_.data(), static_cast<std::size_t>(coeffs_.size()));
  switch (family_) {
    case Family::O:
    case Family::B:
      return space_->curve(Family::B, w, x);
    default:
      return space_->curve(family_, w, x);
  }
}

double mspline_max_bound(const SplineCurve& curve) {
  if (curve.family() != Family::M) throw InvalidConfiguration("mspline_max_bound needs an M curve");
  return curve.space().mspline_bound();
}

double ospline_sq_max_bound(const SplineCurve& curve) {
  if (curve.family() != Family::O) throw InvalidConfiguration("ospline_sq_max_bound needs an O curve");
  return curve.bspline_coefficients().cwiseAbs2().maxCoeff();
}

}  // namespace waveflow
