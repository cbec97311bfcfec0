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

// Autoregressive square-normalizing flow on [0,1]^n.
//
// For every dimension i the conditioner (fed with the whole input, masked) yields
// L sets of I-spline weights and one set of prior shape parameters. The flow maps
// u_i through the I-spline layers to z_i and evaluates
//   psi = prod_i psi_z(z_i) * sqrt(prod_l dI_l/dz).

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "waveflow/autodiff.hpp"
#include "waveflow/conditioner.hpp"
#include "waveflow/errors.hpp"
#include "waveflow/rng.hpp"
#include "waveflow/spline.hpp"

namespace waveflow {

inline constexpr double kInversionTol = 1e-10;

/// Monotone map [0,1] -> [0,1] given by a simplex-weighted I-spline curve.
class ISplineBijection {
 public:
  ISplineBijection(std::shared_ptr<const SplineSpace> space, WeightVector alpha);
  static ISplineBijection from_raw(std::shared_ptr<const SplineSpace> space, const Eigen::VectorXd& raw,
                                   double eps_regularize);
  /// Identity weights alpha_i = (t_{i+k} - t_i) / k.
  static Eigen::VectorXd identity_weights(const KnotVector& knots);
  /// Raw values whose regularized softmax equals the identity weights.
  static Eigen::VectorXd identity_raw(const KnotVector& knots, double eps_regularize);

  const WeightVector& weights() const noexcept { return alpha_; }
  double operator()(double x) const;
  double slope(double x) const;

 private:
  std::shared_ptr<const SplineSpace> space_;
  WeightVector alpha_;
};

/// x with |bij(x) - y| <= tol and bracket width <= tol, by bisection. Exact at 0 and 1.
double invert_bijection(const ISplineBijection& bij, double y, double tol = kInversionTol);

/// sum_j B_j(z) a_j with a = C P raw / ||P raw||, where C maps O- to B-coefficients
/// and P projects out the O-directions that would make a_0 or a_{n-1} nonzero.
class AdaptivePrior {
 public:
  AdaptivePrior(std::shared_ptr<const SplineSpace> space, bool zero_at_lower, bool zero_at_upper);

  const SplineSpace& space() const noexcept { return *space_; }
  bool zero_at_lower() const noexcept { return zero_lower_; }
  bool zero_at_upper() const noexcept { return zero_upper_; }
  const Eigen::MatrixXd& projector() const noexcept { return projector_; }
  /// Shape parameters of the initial prior (sin(pi z) projected onto the constrained basis).
  const Eigen::VectorXd& default_raw() const noexcept { return default_raw_; }

  /// beta = sn(P raw).
  WeightVector beta(const Eigen::VectorXd& raw) const;
  /// B-coefficients of the decoded curve.
  Eigen::VectorXd coefficients(const Eigen::VectorXd& raw) const;
  SplineCurve curve(const Eigen::VectorXd& raw) const;

  template <class R>
  R value(std::span<const R> raw, const R& z) const;

 private:
  std::shared_ptr<const SplineSpace> space_;
  bool zero_lower_;
  bool zero_upper_;
  Eigen::MatrixXd projector_;
  /// C * P with constrained rows set to exact zeros; row-major for per-row access.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> coeff_map_;
  Eigen::VectorXd default_raw_;
};

struct FlowConfig {
  int n_dims = 2;
  int n_layers = 3;
  int order = 5;
  int n_basis = 18;
  int hidden_width = 64;
  int n_hidden_layers = 1;
  double eps_regularize = 1e-4;
  bool zero_at_lower = true;
  bool zero_at_upper = true;
  std::uint64_t seed = 0;
};

struct FlowValue {
  double psi = 0.0;
  double log_abs = 0.0;
  int sign = 0;
};

/// Result of the templated evaluation. `zero` marks an exact zero of psi.
template <class R>
struct LogPsi {
  R log_abs{};
  int sign = 0;
  bool zero = false;
};

/// Decoded double-precision conditional of one dimension.
struct Conditional {
  std::vector<ISplineBijection> layers;
  Eigen::VectorXd prior_raw;
};

class SquareFlow {
 public:
  explicit SquareFlow(const FlowConfig& config);

  const FlowConfig& config() const noexcept { return config_; }
  int n_dims() const noexcept { return config_.n_dims; }
  const std::shared_ptr<const SplineSpace>& space() const noexcept { return space_; }
  const MaskedNet& net() const noexcept { return net_; }
  const AdaptivePrior& prior() const noexcept { return *prior_; }

  std::size_t n_params() const noexcept { return params_.size(); }
  const std::vector<double>& params() const noexcept { return params_; }
  std::vector<double>& mutable_params() noexcept { return params_; }

  /// Head index of bijection layer l and of the prior.
  static int theta_head(int layer) noexcept { return layer; }
  int prior_head() const noexcept { return config_.n_layers; }

  /// log|psi| and sign at u in [0,1]^n for any scalar combination.
  template <class R, class P>
  LogPsi<R> log_abs_psi(std::span<const P> params, std::span<const R> u) const;

  FlowValue evaluate(std::span<const double> u) const;
  /// Conditional of dimension `dim`; depends only on u[0..dim-1].
  Conditional conditional(std::span<const double> u, int dim) const;
  /// psi(x | u_{<dim}) of the decoded conditional.
  double conditional_psi(const Conditional& c, double x) const;

  /// One exact draw from psi^2.
  std::vector<double> sample(Rng& rng) const;

 private:
  FlowConfig config_;
  std::shared_ptr<const SplineSpace> space_;
  std::shared_ptr<const AdaptivePrior> prior_;
  MaskedNet net_;
  std::vector<double> params_;
};

/// Rebuilds the prior so that psi_z vanishes at each zero point. Only 0 and 1 are supported,
/// for zero points and for bijection fixed points alike.
SquareFlow enforce_boundary(const SquareFlow& flow, std::span<const double> zero_points,
                            std::span<const double> fixed_points);

/// I-spline value and slope of simplex weights w at z, as scalars of type R.
template <class R>
void ispline_with_slope(const SplineSpace& space, std::span<const R> w, const R& z, R& value, R& slope) {
  constexpr int nd = ad::derivative_depth<R> + 1 < 4 ? ad::derivative_depth<R> + 1 : 4;
  const LocalBasis lb = space.local_i(ad::primal(z), nd);
  R v(0.0);
  R s(0.0);
  for (int i = 0; i < lb.first; ++i) v = v + w[static_cast<std::size_t>(i)];
  for (int j = 0; j < lb.count; ++j) {
    const auto& d = lb.d;
    const auto jj = static_cast<std::size_t>(j);
    const R& wj = w[static_cast<std::size_t>(lb.first + j)];
    v = v + ad::apply(z, ad::Derivs{d[0][jj], d[1][jj], d[2][jj], d[3][jj]}) * wj;
    s = s + ad::apply(z, ad::Derivs{d[1][jj], d[2][jj], d[3][jj], d[4][jj]}) * wj;
  }
  // Rounded weights need not sum to exactly 1; keep z = 1 a fixed point.
  if (ad::primal(z) == 1.0) v = v + (1.0 - ad::primal(v));
  value = std::move(v);
  slope = std::move(s);
}

template <class R>
R AdaptivePrior::value(std::span<const R> raw, const R& z) const {
  const Eigen::Index n = projector_.rows();
  thread_local std::vector<R> projected;
  projected.resize(static_cast<std::size_t>(n));
  R sq(0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::span<const double> row(projector_.col(i).data(), static_cast<std::size_t>(n));
    projected[static_cast<std::size_t>(i)] = ad::affine(0.0, row, raw);
    sq = sq + projected[static_cast<std::size_t>(i)] * projected[static_cast<std::size_t>(i)];
  }
  if (!(ad::primal(sq) > 0.0)) throw DegenerateWeights("prior shape parameters project to zero");
  constexpr int nd = ad::derivative_depth<R> < 3 ? ad::derivative_depth<R> : 3;
  const LocalBasis lb = space_->local_b(ad::primal(z), nd);
  R acc(0.0);
  for (int j = 0; j < lb.count; ++j) {
    const Eigen::Index row = lb.first + j;
    if (coeff_map_.row(row).isZero(0.0)) continue;
    const std::span<const double> c(coeff_map_.row(row).data(), static_cast<std::size_t>(n));
    const auto jj = static_cast<std::size_t>(j);
    const ad::Derivs f{lb.d[0][jj], lb.d[1][jj], lb.d[2][jj], lb.d[3][jj]};
    acc = acc + ad::apply(z, f) * ad::affine(0.0, c, raw);
  }
  using std::sqrt;
  return acc / sqrt(sq);
}

template <class R, class P>
LogPsi<R> SquareFlow::log_abs_psi(std::span<const P> params, std::span<const R> u) const {
  const int n = config_.n_dims;
  if (static_cast<int>(u.size()) != n) throw InvalidConfiguration("input size does not match the flow");
  for (const R& ui : u) {
    const double p = ad::primal(ui);
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("flow input outside [0, 1]");
  }
  const std::vector<R> raw = forward<P, R>(net_, params, u);
  const auto nb = static_cast<std::size_t>(config_.n_basis);
  std::vector<R> w(nb);
  LogPsi<R> out;
  out.log_abs = R(0.0);
  out.sign = 1;
  for (int i = 0; i < n; ++i) {
    R z = u[static_cast<std::size_t>(i)];
    R log_slope(0.0);
    for (int l = 0; l < config_.n_layers; ++l) {
      const auto start = static_cast<std::size_t>(net_.output_index(i, theta_head(l), 0));
      softmax_regularized<R>(std::span<const R>(raw).subspan(start, nb), config_.eps_regularize, std::span<R>(w));
      R next;
      R slope;
      ispline_with_slope<R>(*space_, std::span<const R>(w), z, next, slope);
      using std::log;
      log_slope = log_slope + log(slope);
      z = std::move(next);
    }
    const auto start = static_cast<std::size_t>(net_.output_index(i, prior_head(), 0));
    const R pz = prior_->value<R>(std::span<const R>(raw).subspan(start, nb), z);
    const double pp = ad::primal(pz);
    if (pp == 0.0) {
      out.zero = true;
      out.sign = 0;
      return out;
    }
    if (pp < 0.0) out.sign = -out.sign;
    using std::log;
    out.log_abs = out.log_abs + log(ad::abs_of(pz)) + 0.5 * log_slope;
  }
  return out;
}

// Checkpoints: "WVFL", u32 version, u32 n_dims, n_layers, order, n_basis, hidden_width,
// f64 box half-length, u64 parameter count, then the parameters as little-endian f64.

struct CheckpointHeader {
  std::uint32_t version = 1;
  std::uint32_t n_dims = 0;
  std::uint32_t n_layers = 0;
  std::uint32_t order = 0;
  std::uint32_t n_basis = 0;
  std::uint32_t hidden_width = 0;
  double half_length = 0.0;
  std::uint64_t n_params = 0;

  bool operator==(const CheckpointHeader&) const = default;
};

struct Checkpoint {
  CheckpointHeader header;
  std::vector<double> params;
};

CheckpointHeader header_of(const SquareFlow& flow, double half_length);
/// Written to a temporary file and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const SquareFlow& flow, double half_length);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Copies the parameters into `flow`; throws CheckpointMismatch on any header difference.
void restore_checkpoint(const Checkpoint& checkpoint, SquareFlow& flow, double half_length);

/// Writes `bytes` to `path` via a temporary sibling and an atomic rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace waveflow
