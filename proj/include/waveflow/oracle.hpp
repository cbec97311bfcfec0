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

// Ground truth: a finite-difference Hamiltonian on the interior points of
// [-L, L]^d (d = 1, 2), its lowest eigenpairs by thick-restart Lanczos, and
// closed-form particle-in-a-box states.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>

#include <Eigen/Core>

#include "waveflow/autodiff.hpp"
#include "waveflow/flow.hpp"
#include "waveflow/physics.hpp"

namespace waveflow {

inline constexpr std::size_t kDefaultMemoryCap = std::size_t{2} << 30;

class GridHamiltonian {
 public:
  /// n_points interior nodes per dimension, spacing 2L / (n_points + 1), Dirichlet walls.
  GridHamiltonian(const HamiltonianSpec& spec, double L, int n_points);

  int dims() const noexcept { return dims_; }
  int n_points() const noexcept { return n_; }
  double spacing() const noexcept { return h_; }
  double half_length() const noexcept { return L_; }
  Eigen::Index size() const noexcept { return potential_.size(); }
  const Eigen::VectorXd& nodes() const noexcept { return nodes_; }
  const Eigen::VectorXd& potential() const noexcept { return potential_; }

  /// out = (-1/2 Laplacian_h + V) v.
  void apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const;
  Eigen::VectorXd operator*(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(v.size());
    apply(v, out);
    return out;
  }
  /// Exchanges the two particle axes (2-particle grids only).
  Eigen::VectorXd swap(const Eigen::VectorXd& v) const;

 private:
  int dims_;
  int n_;
  double L_;
  double h_;
  Eigen::VectorXd nodes_;
  Eigen::VectorXd potential_;
};

/// Checks the memory estimate against `memory_cap` bytes before building.
GridHamiltonian build_hamiltonian(const HamiltonianSpec& spec, double L, int n_points,
                                  std::size_t memory_cap = kDefaultMemoryCap, int krylov_dim = 0);

struct EigenResult {
  Eigen::VectorXd eigenvalues;
  /// Columns normalized so that h^d * sum v^2 = 1.
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXd antisymmetry;
  Eigen::VectorXd residuals;
  int matvecs = 0;
};

struct LanczosOptions {
  /// 0 picks max(2m + 20, 60).
  int krylov_dim = 0;
  int max_restarts = 2000;
  double tol = 1e-10;
  std::uint64_t seed = 0;
};

/// Two-particle grids are solved per exchange sector and merged, so degenerate symmetric and
/// antisymmetric partners are both returned.
EigenResult lowest_eigenpairs(const GridHamiltonian& h, int m, const LanczosOptions& options = {});

struct SelectedState {
  int index = -1;
  double energy = 0.0;
};

/// Lowest state with antisymmetry score below -0.99.
SelectedState select_antisymmetric(const EigenResult& result);

/// Two-grid extrapolation for an O(h^2) error.
double richardson(double e_coarse, double h_coarse, double e_fine, double h_fine);

void write_eigenvector_csv(const std::filesystem::path& path, const GridHamiltonian& h, const Eigen::VectorXd& v);

// Closed-form states in a box of width W = 2L with walls at -L and L.

inline double box_ground_energy(double L) {
  const double w = 2.0 * L;
  return std::numbers::pi * std::numbers::pi / (2.0 * w * w);
}

inline double box_two_fermion_energy(double L) { return 5.0 * box_ground_energy(L); }

/// Normalized sqrt(2/W) sin(pi (x + L) / W).
double analytic_box_ground(double L, double x);

/// Normalized (sqrt(2)/W) [s1(x0) s2(x1) - s1(x1) s2(x0)], s_n(x) = sin(n pi (x + L) / W).
double analytic_box_two_fermion(double L, double x0, double x1);

template <class R>
LogPsi<R> box_ground_log(double L, std::span<const R> x) {
  using std::log;
  using std::sin;
  const double w = 2.0 * L;
  const R s = sin((x[0] + L) * (std::numbers::pi / w));
  LogPsi<R> out;
  if (ad::primal(s) == 0.0) {
    out.zero = true;
    return out;
  }
  out.sign = ad::primal(s) > 0.0 ? 1 : -1;
  out.log_abs = log(ad::abs_of(s)) + 0.5 * std::log(2.0 / w);
  return out;
}

template <class R>
LogPsi<R> box_two_fermion_log(double L, std::span<const R> x) {
  using std::log;
  using std::sin;
  const double w = 2.0 * L;
  const double k = std::numbers::pi / w;
  const R a0 = (x[0] + L) * k;
  const R a1 = (x[1] + L) * k;
  const R v = sin(a0) * sin(2.0 * a1) - sin(a1) * sin(2.0 * a0);
  LogPsi<R> out;
  if (ad::primal(v) == 0.0) {
    out.zero = true;
    return out;
  }
  out.sign = ad::primal(v) > 0.0 ? 1 : -1;
  out.log_abs = log(ad::abs_of(v)) + std::log(std::sqrt(2.0) / w);
  return out;
}

}  // namespace waveflow
