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

#include "waveflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/QR>

#include "waveflow/quadrature.hpp"

namespace waveflow {

ISplineBijection::ISplineBijection(std::shared_ptr<const SplineSpace> space, WeightVector alpha)
    : space_(std::move(space)), alpha_(std::move(alpha)) {
  if (alpha_.weights.size() != space_->n_basis())
    throw InvalidConfiguration("bijection weight count does not match the basis size");
}

ISplineBijection ISplineBijection::from_raw(std::shared_ptr<const SplineSpace> space, const Eigen::VectorXd& raw,
                                            double eps_regularize) {
  return ISplineBijection(std::move(space), normalize_simplex(raw, eps_regularize));
}

Eigen::VectorXd ISplineBijection::identity_weights(const KnotVector& knots) {
  const int n = knots.n_basis();
  const int k = knots.order();
  Eigen::VectorXd alpha(n);
  for (int i = 0; i < n; ++i) alpha[i] = (knots[i + k] - knots[i]) / (k * (knots.upper() - knots.lower()));
  return alpha;
}

Eigen::VectorXd ISplineBijection::identity_raw(const KnotVector& knots, double eps_regularize) {
  const Eigen::VectorXd alpha = identity_weights(knots);
  const double n = static_cast<double>(alpha.size());
  Eigen::VectorXd raw(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    const double c = alpha[i] * (1.0 + n * eps_regularize) - eps_regularize;
    if (!(c > 0.0)) throw InvalidConfiguration("eps_regularize too large for an identity bijection");
    raw[i] = std::log(c);
  }
  return raw;
}

double ISplineBijection::operator()(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const std::span<const double> w(alpha_.weights.data(), static_cast<std::size_t>(alpha_.weights.size()));
  return space_->curve(Family::I, w, x);
}

double ISplineBijection::slope(double x) const {
  const std::span<const double> w(alpha_.weights.data(), static_cast<std::size_t>(alpha_.weights.size()));
  return space_->curve(Family::M, w, x);
}

double invert_bijection(const ISplineBijection& bij, double y, double tol) {
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  double mid = 0.5;
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double r = bij(mid) - y;
    if (hi - lo <= tol && std::abs(r) <= tol) break;
    if (r < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (!(lo < 0.5 * (lo + hi) && 0.5 * (lo + hi) < hi)) break;
  }
  return mid;
}

AdaptivePrior::AdaptivePrior(std::shared_ptr<const SplineSpace> space, bool zero_at_lower, bool zero_at_upper)
    : space_(std::move(space)), zero_lower_(zero_at_lower), zero_upper_(zero_at_upper) {
  const Eigen::MatrixXd& c = space_->ortho().change_matrix;
  const Eigen::Index n = c.rows();
  std::vector<Eigen::Index> pinned;
  if (zero_lower_) pinned.push_back(0);
  if (zero_upper_) pinned.push_back(n - 1);

  projector_ = Eigen::MatrixXd::Identity(n, n);
  if (!pinned.empty()) {
    Eigen::MatrixXd rows(n, static_cast<Eigen::Index>(pinned.size()));
    for (std::size_t p = 0; p < pinned.size(); ++p) rows.col(static_cast<Eigen::Index>(p)) = c.row(pinned[p]).transpose();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(rows);
    const Eigen::MatrixXd u = qr.householderQ() * Eigen::MatrixXd::Identity(n, rows.cols());
    projector_ -= u * u.transpose();
    projector_ = 0.5 * (projector_ + projector_.transpose()).eval();
  }
  coeff_map_ = c * projector_;
  for (Eigen::Index p : pinned) coeff_map_.row(p).setZero();

  // <sin(pi x), O_j> = sum_i C_ij <sin(pi x), B_i>.
  const KnotVector& knots = space_->knots();
  const GaussLegendre rule(16);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  const double a = knots.lower();
  const double width = knots.upper() - a;
  for (int s = knots.order() - 1; s < knots.n_basis(); ++s) {
    if (!(knots[s + 1] > knots[s])) continue;
    for (int q = 0; q < rule.size(); ++q) {
      const auto [x, w] = rule.mapped(q, knots[s], knots[s + 1]);
      const LocalBasis lb = local_bspline(knots, x, 0);
      const double f = std::sin(std::numbers::pi * (x - a) / width);
      for (int j = 0; j < lb.count; ++j) g[lb.first + j] += w * f * lb.d[0][static_cast<std::size_t>(j)];
    }
  }
  const Eigen::VectorXd beta = projector_ * (c.transpose() * g);
  default_raw_ = beta / beta.norm();
}

WeightVector AdaptivePrior::beta(const Eigen::VectorXd& raw) const { return normalize_sphere(projector_ * raw); }

Eigen::VectorXd AdaptivePrior::coefficients(const Eigen::VectorXd& raw) const {
  const Eigen::VectorXd pr = projector_ * raw;
  const double norm = pr.norm();
  if (!(norm > 0.0)) throw DegenerateWeights("prior shape parameters project to zero");
  return coeff_map_ * raw / norm;
}

SplineCurve AdaptivePrior::curve(const Eigen::VectorXd& raw) const {
  return SplineCurve(Family::O, space_, beta(raw));
}

namespace {

std::vector<Head> flow_heads(const FlowConfig& cfg, const KnotVector& knots, const AdaptivePrior& prior) {
  std::vector<Head> heads;
  const Eigen::VectorXd id = ISplineBijection::identity_raw(knots, cfg.eps_regularize);
  for (int l = 0; l < cfg.n_layers; ++l)
    heads.push_back({"theta" + std::to_string(l), cfg.n_basis, std::vector<double>(id.data(), id.data() + id.size())});
  const Eigen::VectorXd& sp = prior.default_raw();
  heads.push_back({"sp", cfg.n_basis, std::vector<double>(sp.data(), sp.data() + sp.size())});
  return heads;
}

void validate(const FlowConfig& cfg) {
  if (cfg.n_dims < 1) throw InvalidConfiguration("n_dims must be positive");
  if (cfg.n_layers < 1) throw InvalidConfiguration("n_layers must be positive");
  if (cfg.order < 4) throw InvalidConfiguration("spline order must be at least 4 for C2 wavefunctions");
  if (cfg.n_basis < cfg.order) throw InvalidConfiguration("n_basis must be at least the spline order");
  if (cfg.hidden_width < 1 || cfg.n_hidden_layers < 1) throw InvalidConfiguration("network sizes must be positive");
  if (!(cfg.eps_regularize >= 0.0)) throw InvalidConfiguration("eps_regularize must be non-negative");
}

}  // namespace

SquareFlow::SquareFlow(const FlowConfig& config) : config_(config) {
  validate(config_);
  space_ = std::make_shared<const SplineSpace>(make_clamped_knots(config_.n_basis, config_.order, 0.0, 1.0));
  prior_ = std::make_shared<const AdaptivePrior>(space_, config_.zero_at_lower, config_.zero_at_upper);
  net_ = build_masked_net(config_.n_dims, config_.hidden_width, config_.n_hidden_layers,
                          flow_heads(config_, space_->knots(), *prior_), config_.seed, &params_);
}

FlowValue SquareFlow::evaluate(std::span<const double> u) const {
  const LogPsi<double> r = log_abs_psi<double, double>(std::span<const double>(params_), u);
  FlowValue out;
  if (r.zero) {
    out.log_abs = -std::numeric_limits<double>::infinity();
    return out;
  }
  out.log_abs = r.log_abs;
  out.sign = r.sign;
  out.psi = r.sign * std::exp(r.log_abs);
  return out;
}

Conditional SquareFlow::conditional(std::span<const double> u, int dim) const {
  if (dim < 0 || dim >= config_.n_dims) throw InvalidConfiguration("dimension out of range");
  std::vector<double> masked(u.begin(), u.end());
  masked.resize(static_cast<std::size_t>(config_.n_dims), 0.0);
  for (std::size_t j = static_cast<std::size_t>(dim); j < masked.size(); ++j) masked[j] = 0.0;
  const std::vector<double> raw =
      forward<double, double>(net_, std::span<const double>(params_), std::span<const double>(masked));
  Conditional c;
  const Eigen::Index nb = config_.n_basis;
  for (int l = 0; l < config_.n_layers; ++l) {
    const Eigen::Map<const Eigen::VectorXd> r(raw.data() + net_.output_index(dim, theta_head(l), 0), nb);
    c.layers.push_back(ISplineBijection::from_raw(space_, r, config_.eps_regularize));
  }
  c.prior_raw = Eigen::Map<const Eigen::VectorXd>(raw.data() + net_.output_index(dim, prior_head(), 0), nb);
  return c;
}

double SquareFlow::conditional_psi(const Conditional& c, double x) const {
  double z = x;
  double jac = 1.0;
  for (const ISplineBijection& b : c.layers) {
    jac *= b.slope(z);
    z = b(z);
  }
  const std::vector<double> raw(c.prior_raw.data(), c.prior_raw.data() + c.prior_raw.size());
  return prior_->value<double>(std::span<const double>(raw), z) * std::sqrt(jac);
}

std::vector<double> SquareFlow::sample(Rng& rng) const {
  std::vector<double> u(static_cast<std::size_t>(config_.n_dims), 0.0);
  for (int i = 0; i < config_.n_dims; ++i) {
    const Conditional c = conditional(u, i);
    const std::vector<double> raw(c.prior_raw.data(), c.prior_raw.data() + c.prior_raw.size());
    const double bound = prior_->coefficients(c.prior_raw).cwiseAbs2().maxCoeff();
    const double z = rejection_sample(
        [&](double t) {
          const double v = prior_->value<double>(std::span<const double>(raw), t);
          return v * v;
        },
        bound, 0.0, 1.0, rng);
    double x = z;
    for (int l = config_.n_layers - 1; l >= 0; --l) x = invert_bijection(c.layers[static_cast<std::size_t>(l)], x);
    u[static_cast<std::size_t>(i)] = x;
  }
  return u;
}

SquareFlow enforce_boundary(const SquareFlow& flow, std::span<const double> zero_points,
                            std::span<const double> fixed_points) {
  FlowConfig cfg = flow.config();
  cfg.zero_at_lower = false;
  cfg.zero_at_upper = false;
  for (double p : zero_points) {
    if (p == 0.0) {
      cfg.zero_at_lower = true;
    } else if (p == 1.0) {
      cfg.zero_at_upper = true;
    } else {
      throw UnsupportedEnforcementPoint("only the endpoints 0 and 1 can be enforcement points");
    }
  }
  for (double p : fixed_points) {
    // Every I-spline bijection fixes 0 and 1 already.
    if (p != 0.0 && p != 1.0) throw UnsupportedEnforcementPoint("only the endpoints 0 and 1 can be fixed points");
  }
  SquareFlow out(cfg);
  out.mutable_params() = flow.params();
  return out;
}

}  // namespace waveflow
