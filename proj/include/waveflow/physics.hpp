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

// Particles in the box [-L, L]: relative coordinates, the antisymmetric
// wavefunction built on a flow, Hamiltonians and local energies.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "waveflow/autodiff.hpp"
#include "waveflow/errors.hpp"
#include "waveflow/flow.hpp"

namespace waveflow {

struct BoxGeometry {
  double half_length = 10.0;
};

/// x_F: the first particle is the free coordinate; x_M: the mean is.
enum class CoordinateChoice { First, Mean };

enum class HamiltonianKind { SoftCoulombHelium, FreeBox, Custom };

struct HamiltonianSpec {
  HamiltonianKind kind = HamiltonianKind::SoftCoulombHelium;
  int n_particles = 2;
  /// Nuclear charge and pair interaction strength of the soft-Coulomb terms.
  double charge = 2.0;
  double interaction = 1.0;
  double softening = 1.0;
  /// Harmonic confinement of the custom kind, 0.5 * omega^2 * x^2 per particle.
  double omega = 0.0;
};

std::string to_string(CoordinateChoice c);
std::string to_string(HamiltonianKind k);
CoordinateChoice parse_coordinate_choice(const std::string& s);
HamiltonianKind parse_hamiltonian_kind(const std::string& s);

/// Relative coordinates in [0,1]^n of sorted absolute positions; `log_det` receives
/// log |d u / d x|.
template <class R>
std::vector<R> to_relative(CoordinateChoice coord, std::span<const R> x, double L, R& log_det) {
  const std::size_t n = x.size();
  if (n == 0) throw InvalidConfiguration("no particles");
  if (!(L > 0.0)) throw InvalidConfiguration("box half-length must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    const double p = ad::primal(x[i]);
    if (!(p >= -L && p <= L)) throw DomainError("particle outside the box");
    if (i > 0 && p < ad::primal(x[i - 1])) throw DomainError("coordinates must be sorted");
  }
  using std::log;
  std::vector<R> u(n);
  if (coord == CoordinateChoice::First) {
    u[0] = (x[0] + L) / (2.0 * L);
    R det_log(std::log(1.0 / (2.0 * L)));
    for (std::size_t i = 1; i < n; ++i) {
      const R room = L - x[i - 1];
      u[i] = (x[i] - x[i - 1]) / room;
      det_log = det_log - log(room);
    }
    log_det = det_log;
    return u;
  }
  R free_space(2.0 * L);
  R det_log(0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const R d = x[i + 1] - x[i];
    u[i] = d / free_space;
    det_log = det_log - log(free_space);
    free_space = free_space - d;
  }
  const R allowed = 2.0 * L - (x[n - 1] - x[0]);
  u[n - 1] = (x[0] + L) / allowed;
  log_det = det_log - log(allowed);
  return u;
}

/// Inverse of to_relative.
std::vector<double> from_relative(CoordinateChoice coord, std::span<const double> u, double L);

/// Permutation sign of sorting x (0 when two coordinates coincide), and the sorted copy.
int sort_parity(std::span<const double> x, std::vector<double>* sorted);

struct PsiValue {
  double value = 0.0;
  int sign = 0;
  double log_abs = 0.0;
};

/// Antisymmetric wavefunction in absolute coordinates:
/// psi(x) = sign(sort) * psi_flow(u(sorted x)) * sqrt(|det du/dx|) / sqrt(n!).
class WaveflowModel {
 public:
  WaveflowModel(SquareFlow flow, BoxGeometry geometry, CoordinateChoice coord);

  const SquareFlow& flow() const noexcept { return flow_; }
  SquareFlow& mutable_flow() noexcept { return flow_; }
  const BoxGeometry& geometry() const noexcept { return geometry_; }
  CoordinateChoice coord() const noexcept { return coord_; }
  int n_particles() const noexcept { return flow_.n_dims(); }

  PsiValue psi(std::span<const double> x) const;

  /// log|psi| on sorted coordinates for any scalar combination.
  template <class R, class P>
  LogPsi<R> log_psi_sorted(std::span<const P> params, std::span<const R> x) const;

  /// Exact draw from psi^2, restricted to the sorted wedge.
  std::vector<double> sample(Rng& rng) const;

 private:
  SquareFlow flow_;
  BoxGeometry geometry_;
  CoordinateChoice coord_;
  double log_norm_;  // -0.5 log n!
};

template <class R, class P>
LogPsi<R> WaveflowModel::log_psi_sorted(std::span<const P> params, std::span<const R> x) const {
  const double L = geometry_.half_length;
  LogPsi<R> out;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double p = ad::primal(x[i]);
    const bool wall = p <= -L || p >= L;
    const bool touch = i > 0 && p == ad::primal(x[i - 1]);
    if (wall || touch) {
      if (p < -L || p > L) throw DomainError("particle outside the box");
      out.zero = true;
      return out;
    }
  }
  R log_det;
  const std::vector<R> u = to_relative<R>(coord_, x, L, log_det);
  out = flow_.log_abs_psi<R, P>(params, std::span<const R>(u));
  if (out.zero) return out;
  out.log_abs = out.log_abs + 0.5 * log_det + log_norm_;
  return out;
}

/// Potential energy at x (any order).
double potential(const HamiltonianSpec& spec, std::span<const double> x);

/// Magnitudes below this count as a node.
inline constexpr double kNodeThreshold = 1e-300;

template <class T>
struct LocalEnergyT {
  T energy{};
  T log_abs{};
};

/// E_L = -1/2 sum_i (d_i^2 log|psi| + (d_i log|psi|)^2) + V, one Taylor pass per coordinate.
/// `log_psi` is called with std::span<const ad::Taylor2<T>> and returns LogPsi<ad::Taylor2<T>>.
template <class T, class F>
LocalEnergyT<T> local_energy_jets(F&& log_psi, std::span<const double> x, double v) {
  using J = ad::Taylor2<T>;
  std::vector<J> jets(x.size());
  T kinetic(0.0);
  LocalEnergyT<T> out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) jets[j] = J(x[j]);
    jets[i] = J::seed(T(x[i]));
    const LogPsi<J> lp = log_psi(std::span<const J>(jets));
    if (lp.zero || !(ad::primal(lp.log_abs) > std::log(kNodeThreshold)))
      throw NodeProximity("local energy requested at a node of psi");
    kinetic = kinetic + lp.log_abs.d2 + lp.log_abs.d1 * lp.log_abs.d1;
    if (i == 0) out.log_abs = lp.log_abs.v;
  }
  out.energy = T(-0.5) * kinetic + T(v);
  return out;
}

/// Local energy of the model at x (any order).
double local_energy(const WaveflowModel& model, const HamiltonianSpec& spec, std::span<const double> x);

/// Local energy and log|psi| of the model on sorted x, both recorded against `params`.
LocalEnergyT<ad::Var> local_energy_recorded(const WaveflowModel& model, const HamiltonianSpec& spec,
                                            std::span<const ad::Var> params, std::span<const double> sorted_x);

}  // namespace waveflow
