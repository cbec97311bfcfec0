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

#include "waveflow/check.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <Eigen/LU>

#include "waveflow/flow.hpp"
#include "waveflow/oracle.hpp"
#include "waveflow/physics.hpp"
#include "waveflow/quadrature.hpp"
#include "waveflow/vqmc.hpp"

namespace waveflow {

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

std::string format_results(std::span<const CheckResult> results) {
  std::ostringstream out;
  std::size_t width = 8;
  for (const CheckResult& r : results) width = std::max(width, r.name.size());
  out << std::left << std::setw(static_cast<int>(width)) << "property"
      << "  result  " << std::setw(12) << "value" << std::setw(12) << "bound"
      << "time\n";
  for (const CheckResult& r : results) {
    out << std::left << std::setw(static_cast<int>(width)) << r.name << "  " << (r.passed ? "PASS    " : "FAIL    ")
        << std::setw(12) << std::setprecision(3) << r.value << std::setw(12) << r.bound << std::fixed
        << std::setprecision(2) << r.seconds << "s" << std::defaultfloat;
    if (!r.detail.empty()) out << "  " << r.detail;
    out << '\n';
  }
  return out.str();
}

namespace {

double uniform(Rng& rng, double a, double b) { return a + (b - a) * uniform01(rng); }

double normal(Rng& rng) {
  std::normal_distribution<double> dist;
  return dist(rng);
}

Eigen::VectorXd random_simplex(Rng& rng, int n) {
  Eigen::VectorXd raw(n);
  for (int i = 0; i < n; ++i) raw[i] = 2.0 * normal(rng);
  return normalize_simplex(raw, 0.0).weights;
}

Eigen::VectorXd random_sphere(Rng& rng, int n) {
  Eigen::VectorXd raw(n);
  for (int i = 0; i < n; ++i) raw[i] = normal(rng);
  return normalize_sphere(raw).weights;
}

void perturb(std::vector<double>& params, Rng& rng, double scale) {
  for (double& p : params) p += scale * normal(rng);
}

/// Leq test; NaN fails.
CheckResult bounded(std::string name, double value, double bound, std::string detail = {}) {
  CheckResult r;
  r.name = std::move(name);
  r.value = value;
  r.bound = bound;
  r.passed = value <= bound;
  r.detail = std::move(detail);
  return r;
}

CheckResult at_least(std::string name, double value, double bound, std::string detail = {}) {
  CheckResult r = bounded(std::move(name), value, bound, std::move(detail));
  r.passed = value >= bound;
  return r;
}

/// Sample points strictly inside the knot range, at least `gap` away from every knot.
std::vector<double> off_knot_points(const KnotVector& knots, int count, double gap) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) {
    const double x = knots.lower() + (knots.upper() - knots.lower()) * (i + 0.5) / count;
    bool near = false;
    for (double t : knots.knots()) near = near || std::abs(x - t) < gap;
    if (!near) out.push_back(x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spline properties.

CheckResult partition_of_unity(const SplineSpace& sp) {
  double worst = 0.0;
  const int n = 10001;
  for (int i = 0; i < n; ++i) {
    const double x = sp.lower() + (sp.upper() - sp.lower()) * (i + 0.5) / n;
    worst = std::max(worst, std::abs(eval_basis(Family::B, sp.knots(), x, 0).sum() - 1.0));
  }
  return bounded("partition_of_unity", worst, 1e-12);
}

CheckResult local_support(const SplineSpace& sp) {
  const KnotVector& t = sp.knots();
  const int k = t.order();
  int violations = 0;
  for (int g = 0; g <= 2000; ++g) {
    const double x = t.lower() + (t.upper() - t.lower()) * g / 2000.0;
    const Eigen::VectorXd b = eval_basis(Family::B, t, x, 0);
    const Eigen::VectorXd m = eval_basis(Family::M, t, x, 0);
    for (int i = 0; i < t.n_basis(); ++i) {
      const bool outside = x < t[i] || x > t[i + k] || (x == t[i + k] && x < t.upper()) ||
                           (x == t[i] && x > t.lower() && t[i] == t[i + k]);
      if (outside && (b[i] != 0.0 || m[i] != 0.0)) ++violations;
    }
  }
  return bounded("local_support", violations, 0.0, "nonzero entries outside the support");
}

Eigen::MatrixXd quadrature_gram(const KnotVector& t) {
  const int n = t.n_basis();
  const GaussLegendre rule(t.order() + 2);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for (int s = t.order() - 1; s < n; ++s) {
    if (!(t[s + 1] > t[s])) continue;
    for (int q = 0; q < rule.size(); ++q) {
      const auto [x, w] = rule.mapped(q, t[s], t[s + 1]);
      const Eigen::VectorXd b = eval_basis(Family::B, t, x, 0);
      g.noalias() += w * b * b.transpose();
    }
  }
  return g;
}

CheckResult m_integrals(const SplineSpace& sp) {
  const KnotVector& t = sp.knots();
  const GaussLegendre rule(t.order() + 1);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(t.n_basis());
  for (int s = t.order() - 1; s < t.n_basis(); ++s) {
    if (!(t[s + 1] > t[s])) continue;
    for (int q = 0; q < rule.size(); ++q) {
      const auto [x, w] = rule.mapped(q, t[s], t[s + 1]);
      total += w * eval_basis(Family::M, t, x, 0);
    }
  }
  return bounded("m_spline_integrals", (total.array() - 1.0).abs().maxCoeff(), 1e-10);
}

CheckResult orthonormality(const SplineSpace& sp) {
  const Eigen::MatrixXd& c = sp.ortho().change_matrix;
  const Eigen::MatrixXd g = quadrature_gram(sp.knots());
  const Eigen::MatrixXd d = c.transpose() * g * c - Eigen::MatrixXd::Identity(c.cols(), c.cols());
  return bounded("o_spline_orthonormality", d.cwiseAbs().maxCoeff(), 1e-8);
}

CheckResult derivative_consistency(const SplineSpace& sp) {
  const KnotVector& t = sp.knots();
  const double h = 1e-5;
  double worst = 0.0;
  const int max_d = std::min(3, t.order() - 1);
  for (double x : off_knot_points(t, 200, 1e-3)) {
    for (int d = 1; d <= max_d; ++d) {
      for (int fam = 0; fam < 3; ++fam) {
        auto eval = [&](double y, int order) {
          if (fam == 2) return eval_ispline_basis(t, y, order);
          return eval_basis(fam == 0 ? Family::B : Family::M, t, y, order);
        };
        if (fam != 2 && d > t.order() - 2) continue;
        const Eigen::VectorXd a = eval(x, d);
        const Eigen::VectorXd fd = (eval(x + h, d - 1) - eval(x - h, d - 1)) / (2.0 * h);
        const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
        worst = std::max(worst, (a - fd).cwiseAbs().maxCoeff() / scale);
      }
    }
  }
  return bounded("derivative_consistency", worst, 1e-6, "central differences, h = 1e-5");
}

CheckResult im_duality(const SplineSpace& sp, Rng& rng) {
  const KnotVector& t = sp.knots();
  const Eigen::VectorXd w = random_simplex(rng, t.n_basis());
  const GaussLegendre rule(t.order() + 1);
  double worst = 0.0;
  for (int s = t.order() - 1; s < t.n_basis(); ++s) {
    if (!(t[s + 1] > t[s])) continue;
    for (int q = 0; q < rule.size(); ++q) {
      const double x = rule.mapped(q, t[s], t[s + 1]).first;
      const double di = eval_ispline_basis(t, x, 1).dot(w);
      const double m = eval_basis(Family::M, t, x, 0).dot(w);
      worst = std::max(worst, std::abs(di - m));
    }
  }
  return bounded("i_m_duality", worst, 1e-12);
}

struct GridBasis {
  std::vector<LocalBasis> local;
};

GridBasis grid_basis(const SplineSpace& sp, int points, bool m_family) {
  GridBasis g;
  g.local.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double x = sp.lower() + (sp.upper() - sp.lower()) * i / (points - 1.0);
    g.local.push_back(m_family ? sp.local_m(x, 0) : sp.local_b(x, 0));
  }
  return g;
}

double grid_max(const GridBasis& g, const Eigen::VectorXd& coeff, bool square) {
  double best = 0.0;
  for (const LocalBasis& lb : g.local) {
    double v = 0.0;
    for (int j = 0; j < lb.count; ++j) v += lb.d[0][static_cast<std::size_t>(j)] * coeff[lb.first + j];
    best = std::max(best, square ? v * v : v);
  }
  return best;
}

CheckResult m_bound_check(const std::shared_ptr<const SplineSpace>& sp, Rng& rng) {
  const GridBasis g = grid_basis(*sp, 100000, true);
  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    const Eigen::VectorXd w = draw == 0 ? Eigen::VectorXd::Unit(sp->n_basis(), 0) : random_simplex(rng, sp->n_basis());
    const SplineCurve curve(Family::M, sp, WeightVector{w, WeightMode::Simplex});
    worst = std::max(worst, grid_max(g, w, false) / mspline_max_bound(curve));
  }
  return bounded("m_spline_max_bound", worst, 1.0, "grid max / bound over 100 simplex draws");
}

CheckResult o_bound_check(const std::shared_ptr<const SplineSpace>& sp, Rng& rng) {
  const GridBasis g = grid_basis(*sp, 100000, false);
  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    const Eigen::VectorXd beta = draw == 0 ? Eigen::VectorXd::Unit(sp->n_basis(), 0) : random_sphere(rng, sp->n_basis());
    const SplineCurve curve(Family::O, sp, WeightVector{beta, WeightMode::UnitSphere});
    worst = std::max(worst, grid_max(g, curve.bspline_coefficients(), true) / ospline_sq_max_bound(curve));
  }
  return bounded("o_spline_sq_max_bound", worst, 1.0, "grid max / bound over 100 unit-sphere draws");
}

/// Integral of (sum_j a_j B_j)^2 from the lower end to x.
class SquareCdf {
 public:
  SquareCdf(const SplineSpace& sp, Eigen::VectorXd a) : sp_(sp), a_(std::move(a)), rule_(sp.order() + 1) {
    const KnotVector& t = sp.knots();
    cumulative_.assign(static_cast<std::size_t>(t.n_basis() + 1), 0.0);
    for (int s = t.order() - 1; s < t.n_basis(); ++s)
      cumulative_[static_cast<std::size_t>(s + 1)] = cumulative_[static_cast<std::size_t>(s)] + piece(t[s], t[s + 1]);
  }
  double operator()(double x) const {
    const KnotVector& t = sp_.knots();
    if (x <= t.lower()) return 0.0;
    if (x >= t.upper()) return cumulative_.back();
    const int s = t.find_span(x);
    return cumulative_[static_cast<std::size_t>(s)] + piece(t[s], x);
  }

 private:
  double piece(double lo, double hi) const {
    if (!(hi > lo)) return 0.0;
    double acc = 0.0;
    for (int q = 0; q < rule_.size(); ++q) {
      const auto [x, w] = rule_.mapped(q, lo, hi);
      const LocalBasis lb = sp_.local_b(x, 0);
      double v = 0.0;
      for (int j = 0; j < lb.count; ++j) v += lb.d[0][static_cast<std::size_t>(j)] * a_[lb.first + j];
      acc += w * v * v;
    }
    return acc;
  }
  const SplineSpace& sp_;
  Eigen::VectorXd a_;
  GaussLegendre rule_;
  std::vector<double> cumulative_;
};

CheckResult ks_result(std::string name, const std::vector<double>& samples, const std::function<double(double)>& cdf) {
  const double d = ks_statistic(samples, cdf);
  const double p = ks_pvalue(d, samples.size());
  std::ostringstream detail;
  detail << "D = " << d << ", n = " << samples.size();
  return at_least(std::move(name), p, 0.01, detail.str());
}

CheckResult ks_mspline(const std::shared_ptr<const SplineSpace>& sp, Rng& rng) {
  const Eigen::VectorXd w = random_simplex(rng, sp->n_basis());
  const std::span<const double> ws(w.data(), static_cast<std::size_t>(w.size()));
  const double bound = sp->mspline_bound();
  std::vector<double> samples(100000);
  for (double& s : samples)
    s = rejection_sample([&](double x) { return sp->curve(Family::M, ws, x); }, bound, 0.0, 1.0, rng);
  return ks_result("ks_m_spline_sampling", samples, [&](double x) { return sp->curve(Family::I, ws, x); });
}

CheckResult ks_ospline(const std::shared_ptr<const SplineSpace>& sp, Rng& rng) {
  const SplineCurve curve(Family::O, sp, WeightVector{random_sphere(rng, sp->n_basis()), WeightMode::UnitSphere});
  const double bound = ospline_sq_max_bound(curve);
  std::vector<double> samples(100000);
  for (double& s : samples)
    s = rejection_sample(
        [&](double x) {
          const double v = curve(x);
          return v * v;
        },
        bound, 0.0, 1.0, rng);
  const SquareCdf cdf(*sp, curve.bspline_coefficients());
  return ks_result("ks_o_spline_sampling", samples, [&](double x) { return cdf(x); });
}

// ---------------------------------------------------------------------------
// Flow and physics properties.

FlowConfig small_flow(const RunConfig& c, int n_dims) {
  FlowConfig f = c.flow_config();
  f.n_dims = n_dims;
  return f;
}

CheckResult ks_flow(const RunConfig& c, Rng& rng) {
  const SquareFlow flow(small_flow(c, 1));
  std::vector<double> samples(100000);
  for (double& s : samples) s = flow.sample(rng)[0];
  const SquareCdf cdf(*flow.space(), flow.prior().coefficients(flow.prior().default_raw()));
  return ks_result("ks_flow_sampling", samples, [&](double x) { return cdf(x); });
}

CheckResult conditional_normalization(const RunConfig& c, Rng& rng) {
  SquareFlow flow(small_flow(c, std::max(2, c.system.hamiltonian.n_particles)));
  perturb(flow.mutable_params(), rng, 0.5);
  const GaussLegendre rule(16);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> u(static_cast<std::size_t>(flow.n_dims()));
    for (double& x : u) x = uniform01(rng);
    for (int d = 0; d < flow.n_dims(); ++d) {
      const Conditional cond = flow.conditional(u, d);
      const double total = integrate(
          [&](double x) {
            const double v = flow.conditional_psi(cond, x);
            return v * v;
          },
          0.0, 1.0, 1024, rule);
      worst = std::max(worst, std::abs(total - 1.0));
    }
  }
  return bounded("conditional_normalization", worst, 1e-6);
}

WaveflowModel random_model(const RunConfig& c, int n, Rng& rng, double scale = 0.5) {
  WaveflowModel m(SquareFlow(small_flow(c, n)), BoxGeometry{c.system.half_length}, c.model.coordinates);
  perturb(m.mutable_flow().mutable_params(), rng, scale);
  return m;
}

/// The triangle x0 < x1 is swept in the variables each relative map treats as linear:
/// (x0, x1) for the first-particle map, (x1 - x0, x0) for the mean map, whose room
/// 2L - (x1 - x0) shrinks towards the corner (-L, L).
CheckResult global_normalization(const RunConfig& c, Rng& rng) {
  const WaveflowModel m = random_model(c, 2, rng, 0.2);
  const double L = c.system.half_length;
  const GaussLegendre rule(8);
  auto density = [&](double x0, double x1) {
    const double x[2] = {x0, x1};
    const double v = m.psi(x).value;
    return v * v;
  };
  double total = 0.0;
  if (m.coord() == CoordinateChoice::First) {
    total = integrate(
        [&](double x0) { return integrate([&](double x1) { return density(x0, x1); }, x0, L, 48, rule); }, -L, L, 48,
        rule);
  } else {
    total = integrate(
        [&](double d) { return integrate([&](double x0) { return density(x0, x0 + d); }, -L, L - d, 48, rule); }, 0.0,
        2.0 * L, 48, rule);
  }
  return bounded("global_normalization", std::abs(2.0 * total - 1.0), 1e-4, "two particles, whole box");
}

CheckResult antisymmetry(const RunConfig& c, Rng& rng) {
  const WaveflowModel m = random_model(c, 2, rng);
  const double L = c.system.half_length;
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const double a = uniform(rng, -L, L);
    const double b = uniform(rng, -L, L);
    const double ab[2] = {a, b};
    const double ba[2] = {b, a};
    const double aa[2] = {a, a};
    const double wall_lo[2] = {-L, a};
    const double wall_hi[2] = {a, L};
    if (m.psi(ab).value != -m.psi(ba).value) ++violations;
    if (m.psi(aa).value != 0.0 || m.psi(wall_lo).value != 0.0 || m.psi(wall_hi).value != 0.0) ++violations;
  }
  const WaveflowModel m3 = random_model(c, 3, rng);
  for (int i = 0; i < 200; ++i) {
    const double x[3] = {uniform(rng, -L, L), uniform(rng, -L, L), uniform(rng, -L, L)};
    const double cyc[3] = {x[2], x[0], x[1]};
    const double swp[3] = {x[1], x[0], x[2]};
    if (m3.psi(cyc).value != m3.psi(x).value || m3.psi(swp).value != -m3.psi(x).value) ++violations;
  }
  return bounded("antisymmetry_and_zeros", violations, 0.0, "exact equality");
}

int permutation_sign(const std::vector<int>& p) {
  std::vector<bool> seen(p.size(), false);
  int sign = 1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (seen[i]) continue;
    int len = 0;
    for (std::size_t j = i; !seen[j]; j = static_cast<std::size_t>(p[j])) {
      seen[j] = true;
      ++len;
    }
    if (len % 2 == 0) sign = -sign;
  }
  return sign;
}

CheckResult parity() {
  int violations = 0;
  int total = 0;
  for (int n = 1; n <= 5; ++n) {
    std::vector<int> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), 0);
    do {
      std::vector<double> x(p.begin(), p.end());
      if (sort_parity(x, nullptr) != permutation_sign(p)) ++violations;
      ++total;
    } while (std::next_permutation(p.begin(), p.end()));
  }
  return bounded("parity_vs_permutation_sign", violations, 0.0, std::to_string(total) + " permutations");
}

CheckResult bijection_roundtrip(const std::shared_ptr<const SplineSpace>& sp, double eps, Rng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd raw(sp->n_basis());
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw[i] = 2.0 * normal(rng);
    const ISplineBijection bij = ISplineBijection::from_raw(sp, raw, eps);
    for (int i = 0; i < 100; ++i) {
      const double y = uniform01(rng);
      worst = std::max(worst, std::abs(bij(invert_bijection(bij, y)) - y));
      const double x = uniform01(rng);
      worst = std::max(worst, std::abs(invert_bijection(bij, bij(x)) - x));
    }
    if (invert_bijection(bij, 0.0) != 0.0 || invert_bijection(bij, 1.0) != 1.0) worst = 1.0;
  }
  return bounded("bijection_roundtrip", worst, 2e-10);
}

CheckResult coordinate_roundtrip(Rng& rng) {
  double worst = 0.0;
  const double L = 10.0;
  for (CoordinateChoice coord : {CoordinateChoice::First, CoordinateChoice::Mean}) {
    for (int n = 1; n <= 2; ++n) {
      for (int i = 0; i < 1000; ++i) {
        std::vector<double> u(static_cast<std::size_t>(n));
        for (double& v : u) v = uniform01(rng);
        const std::vector<double> x = from_relative(coord, u, L);
        double log_det = 0.0;
        const std::vector<double> back = to_relative<double>(coord, x, L, log_det);
        for (int j = 0; j < n; ++j)
          worst = std::max(worst, std::abs(back[static_cast<std::size_t>(j)] - u[static_cast<std::size_t>(j)]));
      }
    }
  }
  return bounded("coordinate_roundtrip", worst, 1e-12);
}

CheckResult log_det_check(Rng& rng) {
  double worst = 0.0;
  const double L = 5.0;
  const double h = 1e-6;
  for (CoordinateChoice coord : {CoordinateChoice::First, CoordinateChoice::Mean}) {
    for (int n = 2; n <= 3; ++n) {
      for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> u(static_cast<std::size_t>(n));
        for (double& v : u) v = uniform(rng, 0.1, 0.9);
        const std::vector<double> x = from_relative(coord, u, L);
        double log_det = 0.0;
        to_relative<double>(coord, x, L, log_det);
        Eigen::MatrixXd jac(n, n);
        for (int j = 0; j < n; ++j) {
          std::vector<double> xp = x;
          std::vector<double> xm = x;
          xp[static_cast<std::size_t>(j)] += h;
          xm[static_cast<std::size_t>(j)] -= h;
          double dummy = 0.0;
          const std::vector<double> up = to_relative<double>(coord, xp, L, dummy);
          const std::vector<double> um = to_relative<double>(coord, xm, L, dummy);
          for (int i = 0; i < n; ++i)
            jac(i, j) = (up[static_cast<std::size_t>(i)] - um[static_cast<std::size_t>(i)]) / (2.0 * h);
        }
        const double fd = std::abs(jac.determinant());
        worst = std::max(worst, std::abs(std::exp(log_det) - fd) / fd);
      }
    }
  }
  return bounded("log_det_vs_finite_difference", worst, 1e-6);
}

CheckResult laplacian_check(const RunConfig& c, Rng& rng) {
  const int n = std::max(2, c.system.hamiltonian.n_particles);
  const WaveflowModel m = random_model(c, n, rng, 0.1);
  const double h = 1e-4;
  double worst = 0.0;
  const std::span<const double> params(m.flow().params());
  using J = ad::Taylor2<double>;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x = m.sample(rng);
    const double L = c.system.half_length;
    bool inside = true;
    for (std::size_t i = 0; i < x.size(); ++i) {
      inside = inside && std::abs(x[i]) < L - 4 * h;
      if (i > 0) inside = inside && x[i] - x[i - 1] > 4 * h;
    }
    if (!inside) continue;
    const double psi = m.psi(x).value;
    const auto energy = local_energy_jets<double>(
        [&](std::span<const J> xs) { return m.log_psi_sorted<J, double>(params, xs); }, x, 0.0);
    const double analytic = -2.0 * energy.energy * psi;
    double fd = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto at = [&](double dx) {
        std::vector<double> y = x;
        y[i] += dx;
        return m.psi(y).value;
      };
      fd += (-at(2 * h) + 16 * at(h) - 30 * psi + 16 * at(-h) - at(-2 * h)) / (12 * h * h);
    }
    worst = std::max(worst, std::abs(analytic - fd) / std::max(std::abs(analytic), 1e-2 * std::abs(psi)));
  }
  return bounded("laplacian_vs_finite_difference", worst, 1e-5, "five-point stencil, h = 1e-4");
}

CheckResult gradient_check_toy(const CheckContext& ctx, Rng& rng) {
  FlowConfig f;
  f.n_dims = 1;
  f.n_layers = 1;
  f.order = 4;
  f.n_basis = 8;
  f.hidden_width = 2;
  f.seed = ctx.seed;
  WaveflowModel m(SquareFlow(f), BoxGeometry{5.0}, CoordinateChoice::Mean);
  perturb(m.mutable_flow().mutable_params(), rng, 0.3);
  HamiltonianSpec spec;
  spec.kind = HamiltonianKind::Custom;
  spec.n_particles = 1;
  spec.omega = 0.5;
  const GradientCheckReport report = gradient_check(m, spec, rng, ctx.gradient_samples);
  return bounded("score_gradient_vs_quadrature", report.max_relative_deviation, 5e-2,
                 std::to_string(ctx.gradient_samples) + " samples, 1-particle toy");
}

CheckResult analytic_local_energy(Rng& rng) {
  double worst = 0.0;
  using J = ad::Taylor2<double>;
  for (double L : {5.0, 10.0}) {
    const double expected2 = box_two_fermion_energy(L);
    const double expected1 = box_ground_energy(L);
    for (int i = 0; i < 100; ++i) {
      const double x0 = uniform(rng, -L, L);
      const double x1 = uniform(rng, -L, L);
      if (std::abs(x0 - x1) < 1e-3) continue;
      const double x[2] = {x0, x1};
      const auto e2 = local_energy_jets<double>([&](std::span<const J> xs) { return box_two_fermion_log<J>(L, xs); },
                                                x, 0.0);
      worst = std::max(worst, std::abs(e2.energy - expected2) / expected2);
      const auto e1 = local_energy_jets<double>([&](std::span<const J> xs) { return box_ground_log<J>(L, xs); },
                                                std::span<const double>(x, 1), 0.0);
      worst = std::max(worst, std::abs(e1.energy - expected1) / expected1);
    }
  }
  return bounded("analytic_state_local_energy", worst, 1e-8, "two-fermion and one-particle box states");
}

template <class F>
void timed(std::vector<CheckResult>& out, const CheckContext& ctx, const char* name, F&& f) {
  if (!ctx.only.empty() && std::find(ctx.only.begin(), ctx.only.end(), name) == ctx.only.end()) return;
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r;
  try {
    r = f();
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.name = name;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.push_back(std::move(r));
}

}  // namespace

std::vector<CheckResult> run_property_suite(const CheckContext& ctx) {
  std::vector<CheckResult> out;
  const RunConfig& c = ctx.config;
  auto space = std::make_shared<SplineSpace>(make_clamped_knots(c.n_basis(), c.model.order, 0.0, 1.0));
  if (ctx.tamper) ctx.tamper(*space);
  const std::shared_ptr<const SplineSpace> sp = space;
  auto rng = [&](std::uint64_t id) { return derive_rng(ctx.seed, id); };

  auto with_rng = [&](std::uint64_t id, auto&& f) {
    return [&, id] {
      Rng r = rng(id);
      return f(r);
    };
  };
  timed(out, ctx, "partition_of_unity", [&] { return partition_of_unity(*sp); });
  timed(out, ctx, "local_support", [&] { return local_support(*sp); });
  timed(out, ctx, "m_spline_integrals", [&] { return m_integrals(*sp); });
  timed(out, ctx, "o_spline_orthonormality", [&] { return orthonormality(*sp); });
  timed(out, ctx, "derivative_consistency", [&] { return derivative_consistency(*sp); });
  timed(out, ctx, "i_m_duality", with_rng(1, [&](Rng& r) { return im_duality(*sp, r); }));
  timed(out, ctx, "m_spline_max_bound", with_rng(2, [&](Rng& r) { return m_bound_check(sp, r); }));
  timed(out, ctx, "o_spline_sq_max_bound", with_rng(3, [&](Rng& r) { return o_bound_check(sp, r); }));
  timed(out, ctx, "conditional_normalization", with_rng(4, [&](Rng& r) { return conditional_normalization(c, r); }));
  timed(out, ctx, "global_normalization", with_rng(5, [&](Rng& r) { return global_normalization(c, r); }));
  timed(out, ctx, "antisymmetry_and_zeros", with_rng(6, [&](Rng& r) { return antisymmetry(c, r); }));
  timed(out, ctx, "parity_vs_permutation_sign", [&] { return parity(); });
  timed(out, ctx, "bijection_roundtrip",
        with_rng(7, [&](Rng& r) { return bijection_roundtrip(sp, c.model.eps_regularize, r); }));
  timed(out, ctx, "coordinate_roundtrip", with_rng(8, [&](Rng& r) { return coordinate_roundtrip(r); }));
  timed(out, ctx, "log_det_vs_finite_difference", with_rng(9, [&](Rng& r) { return log_det_check(r); }));
  timed(out, ctx, "laplacian_vs_finite_difference", with_rng(10, [&](Rng& r) { return laplacian_check(c, r); }));
  timed(out, ctx, "score_gradient_vs_quadrature", with_rng(11, [&](Rng& r) { return gradient_check_toy(ctx, r); }));
  timed(out, ctx, "analytic_state_local_energy", with_rng(12, [&](Rng& r) { return analytic_local_energy(r); }));
  timed(out, ctx, "ks_m_spline_sampling", with_rng(13, [&](Rng& r) { return ks_mspline(sp, r); }));
  timed(out, ctx, "ks_o_spline_sampling", with_rng(14, [&](Rng& r) { return ks_ospline(sp, r); }));
  timed(out, ctx, "ks_flow_sampling", with_rng(15, [&](Rng& r) { return ks_flow(c, r); }));
  return out;
}

}  // namespace waveflow
