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

#include "waveflow/oracle.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "waveflow/rng.hpp"

namespace waveflow {

GridHamiltonian::GridHamiltonian(const HamiltonianSpec& spec, double L, int n_points)
    : dims_(spec.n_particles), n_(n_points), L_(L) {
  if (dims_ != 1 && dims_ != 2) throw InvalidConfiguration("the grid oracle supports one or two particles");
  if (n_points < 16) throw InvalidConfiguration("the grid needs at least 16 points per dimension");
  if (!(L > 0.0)) throw InvalidConfiguration("box half-length must be positive");
  h_ = 2.0 * L / (n_points + 1);
  nodes_.resize(n_);
  for (int i = 0; i < n_; ++i) nodes_[i] = -L + (i + 1) * h_;
  if (dims_ == 1) {
    potential_.resize(n_);
    for (int i = 0; i < n_; ++i) {
      const double x[1] = {nodes_[i]};
      potential_[i] = waveflow::potential(spec, x);
    }
  } else {
    potential_.resize(static_cast<Eigen::Index>(n_) * n_);
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        const double x[2] = {nodes_[i], nodes_[j]};
        potential_[static_cast<Eigen::Index>(i) * n_ + j] = waveflow::potential(spec, x);
      }
    }
  }
}

void GridHamiltonian::apply(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
  const double c = 0.5 / (h_ * h_);
  out.resize(v.size());
  if (dims_ == 1) {
    for (int i = 0; i < n_; ++i) {
      const double left = i > 0 ? v[i - 1] : 0.0;
      const double right = i + 1 < n_ ? v[i + 1] : 0.0;
      out[i] = c * (2.0 * v[i] - left - right) + potential_[i] * v[i];
    }
    return;
  }
  const Eigen::Index n = n_;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index k = i * n + j;
      double lap = 4.0 * v[k];
      if (i > 0) lap -= v[k - n];
      if (i + 1 < n) lap -= v[k + n];
      if (j > 0) lap -= v[k - 1];
      if (j + 1 < n) lap -= v[k + 1];
      out[k] = c * lap + potential_[k] * v[k];
    }
  }
}

Eigen::VectorXd GridHamiltonian::swap(const Eigen::VectorXd& v) const {
  if (dims_ != 2) throw InvalidConfiguration("particle exchange needs a two-particle grid");
  Eigen::VectorXd out(v.size());
  const Eigen::Index n = n_;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out[j * n + i] = v[i * n + j];
  return out;
}

GridHamiltonian build_hamiltonian(const HamiltonianSpec& spec, double L, int n_points, std::size_t memory_cap,
                                  int krylov_dim) {
  if (n_points < 16) throw InvalidConfiguration("the grid needs at least 16 points per dimension");
  const double size = std::pow(static_cast<double>(n_points), std::max(1, spec.n_particles));
  const int vectors = (krylov_dim > 0 ? krylov_dim : 60) + 8;
  const double bytes = size * 8.0 * vectors;
  if (bytes > static_cast<double>(memory_cap)) {
    std::ostringstream msg;
    msg << "grid of " << size << " points needs about " << bytes / (1 << 20) << " MiB, above the cap of "
        << memory_cap / (1 << 20) << " MiB";
    throw TooLarge(msg.str());
  }
  return GridHamiltonian(spec, L, n_points);
}

namespace {

struct Ritz {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  int matvecs = 0;
  bool converged = false;
};

// Thick-restart Lanczos for the m lowest pairs. sector = +1 / -1 confines the iteration to the
// symmetric / antisymmetric part under particle exchange, 0 uses the whole space.
Ritz thick_restart_lanczos(const GridHamiltonian& h, int m, const LanczosOptions& options, int sector,
                           Eigen::Index sector_dim) {
  const Eigen::Index n = h.size();
  const int kdim = static_cast<int>(
      std::min<Eigen::Index>(sector_dim, options.krylov_dim > 0 ? options.krylov_dim : std::max(2 * m + 20, 60)));
  if (kdim <= m) throw InvalidConfiguration("Krylov dimension too small for the requested pairs");
  const int keep = std::min(kdim - 1, std::max(m + (kdim - m) / 3, m + 1));

  auto project = [&](Eigen::VectorXd& v) {
    if (sector != 0) v = 0.5 * (v + sector * h.swap(v));
  };
  Rng rng = derive_rng(options.seed, 0x6c616e637a6f73ULL + static_cast<std::uint64_t>(sector + 1));
  auto random_vector = [&]() {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform01(rng) - 0.5;
    project(v);
    return v;
  };

  Eigen::MatrixXd basis(n, kdim + 1);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(kdim, kdim);
  basis.col(0) = random_vector().normalized();
  int start = 0;
  Ritz out;
  Eigen::VectorXd w(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  double beta = 0.0;

  for (int restart = 0; restart <= options.max_restarts; ++restart) {
    for (int j = start; j < kdim; ++j) {
      h.apply(basis.col(j), w);
      project(w);
      ++out.matvecs;
      Eigen::VectorXd coeff = basis.leftCols(j + 1).transpose() * w;
      w.noalias() -= basis.leftCols(j + 1) * coeff;
      const Eigen::VectorXd again = basis.leftCols(j + 1).transpose() * w;
      w.noalias() -= basis.leftCols(j + 1) * again;
      coeff += again;
      for (int i = 0; i <= j; ++i) t(i, j) = t(j, i) = coeff[i];
      beta = w.norm();
      if (beta < 1e-13 * std::max(1.0, std::abs(t(j, j)))) {
        // Invariant subspace: continue with a fresh direction.
        Eigen::VectorXd r = random_vector();
        for (int pass = 0; pass < 2; ++pass) r -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * r);
        basis.col(j + 1) = r.normalized();
        beta = 0.0;
      } else {
        basis.col(j + 1) = w / beta;
      }
    }
    es.compute(t);
    const Eigen::VectorXd& theta = es.eigenvalues();
    const Eigen::MatrixXd& y = es.eigenvectors();
    Eigen::VectorXd res(m);
    for (int i = 0; i < m; ++i) res[i] = std::abs(beta * y(kdim - 1, i));
    const double scale = std::max(1.0, theta.cwiseAbs().head(m).maxCoeff());
    out.converged = (res.array() <= options.tol * scale).all();
    if (out.converged || restart == options.max_restarts) {
      out.values = theta.head(m);
      out.vectors = basis.leftCols(kdim) * y.leftCols(m);
      return out;
    }
    // Thick restart: keep the lowest Ritz vectors plus the residual direction.
    const Eigen::MatrixXd kept = basis.leftCols(kdim) * y.leftCols(keep);
    basis.col(keep) = basis.col(kdim);
    basis.leftCols(keep) = kept;
    t.setZero();
    for (int i = 0; i < keep; ++i) t(i, i) = theta[i];
    start = keep;
  }
  throw ConvergenceError("Lanczos iteration cap reached");
}

}  // namespace

EigenResult lowest_eigenpairs(const GridHamiltonian& h, int m, const LanczosOptions& options) {
  if (m < 1) throw InvalidConfiguration("at least one eigenpair must be requested");
  const Eigen::Index n = h.size();
  const Eigen::Index p = h.n_points();
  std::vector<Ritz> parts;
  if (h.dims() == 2) {
    // Exchange symmetry makes mixed-sector degeneracies exact; one Krylov space per sector resolves them.
    parts.push_back(thick_restart_lanczos(h, m, options, +1, p * (p + 1) / 2));
    parts.push_back(thick_restart_lanczos(h, m, options, -1, p * (p - 1) / 2));
  } else {
    parts.push_back(thick_restart_lanczos(h, m, options, 0, n));
  }

  std::vector<std::pair<double, std::pair<int, int>>> order;
  EigenResult out;
  bool converged = true;
  for (int k = 0; k < static_cast<int>(parts.size()); ++k) {
    out.matvecs += parts[static_cast<std::size_t>(k)].matvecs;
    converged = converged && parts[static_cast<std::size_t>(k)].converged;
    for (int i = 0; i < m; ++i) order.push_back({parts[static_cast<std::size_t>(k)].values[i], {k, i}});
  }
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  const double measure = std::pow(h.spacing(), h.dims());
  out.eigenvalues.resize(m);
  out.eigenvectors.resize(n, m);
  out.residuals.resize(m);
  out.antisymmetry.resize(m);
  for (int i = 0; i < m; ++i) {
    const auto [k, j] = order[static_cast<std::size_t>(i)].second;
    out.eigenvalues[i] = order[static_cast<std::size_t>(i)].first;
    Eigen::VectorXd v = parts[static_cast<std::size_t>(k)].vectors.col(j);
    const Eigen::VectorXd r = h * v - out.eigenvalues[i] * v;
    out.residuals[i] = r.norm() / v.norm();
    out.antisymmetry[i] = h.dims() == 2 ? v.dot(h.swap(v)) / v.squaredNorm() : 1.0;
    out.eigenvectors.col(i) = v / std::sqrt(measure * v.squaredNorm());
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "Lanczos did not converge after " << out.matvecs << " matrix-vector products; worst residual "
        << out.residuals.maxCoeff();
    throw ConvergenceError(msg.str());
  }
  return out;
}

SelectedState select_antisymmetric(const EigenResult& result) {
  for (Eigen::Index i = 0; i < result.eigenvalues.size(); ++i) {
    if (result.antisymmetry[i] < -0.99) return {static_cast<int>(i), result.eigenvalues[i]};
  }
  throw InsufficientStates("no antisymmetric state among the " + std::to_string(result.eigenvalues.size()) +
                           " computed eigenpairs");
}

double richardson(double e_coarse, double h_coarse, double e_fine, double h_fine) {
  const double a = h_coarse * h_coarse;
  const double b = h_fine * h_fine;
  return (e_fine * a - e_coarse * b) / (a - b);
}

void write_eigenvector_csv(const std::filesystem::path& path, const GridHamiltonian& h, const Eigen::VectorXd& v) {
  std::ostringstream out;
  out << std::setprecision(17);
  if (h.dims() == 1) {
    out << "x0,psi\n";
    for (int i = 0; i < h.n_points(); ++i) out << h.nodes()[i] << ',' << v[i] << '\n';
  } else {
    out << "x0,x1,psi\n";
    for (int i = 0; i < h.n_points(); ++i)
      for (int j = 0; j < h.n_points(); ++j)
        out << h.nodes()[i] << ',' << h.nodes()[j] << ',' << v[static_cast<Eigen::Index>(i) * h.n_points() + j] << '\n';
  }
  write_file_atomic(path, out.str());
}

double analytic_box_ground(double L, double x) {
  const double w = 2.0 * L;
  return std::sqrt(2.0 / w) * std::sin(std::numbers::pi * (x + L) / w);
}

double analytic_box_two_fermion(double L, double x0, double x1) {
  const double w = 2.0 * L;
  const double k = std::numbers::pi / w;
  const double a0 = (x0 + L) * k;
  const double a1 = (x1 + L) * k;
  return std::sqrt(2.0) / w * (std::sin(a0) * std::sin(2.0 * a1) - std::sin(a1) * std::sin(2.0 * a0));
}

}  // namespace waveflow
