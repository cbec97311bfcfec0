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

#include "waveflow/physics.hpp"

#include <cmath>

namespace waveflow {

std::string to_string(CoordinateChoice c) { return c == CoordinateChoice::First ? "first" : "mean"; }

std::string to_string(HamiltonianKind k) {
  switch (k) {
    case HamiltonianKind::SoftCoulombHelium:
      return "soft_coulomb_helium";
    case HamiltonianKind::FreeBox:
      return "free_box";
    default:
      return "custom";
  }
}

CoordinateChoice parse_coordinate_choice(const std::string& s) {
  if (s == "first" || s == "x_F") return CoordinateChoice::First;
  if (s == "mean" || s == "x_M") return CoordinateChoice::Mean;
  throw InvalidConfiguration("unknown coordinate choice '" + s + "'");
}

HamiltonianKind parse_hamiltonian_kind(const std::string& s) {
  if (s == "soft_coulomb_helium") return HamiltonianKind::SoftCoulombHelium;
  if (s == "free_box") return HamiltonianKind::FreeBox;
  if (s == "custom") return HamiltonianKind::Custom;
  throw InvalidConfiguration("unknown hamiltonian kind '" + s + "'");
}

std::vector<double> from_relative(CoordinateChoice coord, std::span<const double> u, double L) {
  const std::size_t n = u.size();
  if (n == 0) throw InvalidConfiguration("no particles");
  std::vector<double> x(n);
  if (coord == CoordinateChoice::First) {
    x[0] = (u[0] - 0.5) * 2.0 * L;
    for (std::size_t i = 1; i < n; ++i) x[i] = u[i] * (L - x[i - 1]) + x[i - 1];
    return x;
  }
  double free_space = 2.0 * L;
  std::vector<double> offset(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = u[i] * free_space;
    free_space -= d;
    offset[i + 1] = offset[i] + d;
  }
  x[0] = u[n - 1] * (2.0 * L - offset[n - 1]) - L;
  for (std::size_t i = 1; i < n; ++i) x[i] = x[0] + offset[i];
  return x;
}

int sort_parity(std::span<const double> x, std::vector<double>* sorted) {
  int inversions = 0;
  bool coincident = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      if (x[i] > x[j]) ++inversions;
      if (x[i] == x[j]) coincident = true;
    }
  }
  if (sorted != nullptr) {
    sorted->assign(x.begin(), x.end());
    std::sort(sorted->begin(), sorted->end());
  }
  if (coincident) return 0;
  return inversions % 2 == 0 ? 1 : -1;
}

WaveflowModel::WaveflowModel(SquareFlow flow, BoxGeometry geometry, CoordinateChoice coord)
    : flow_(std::move(flow)), geometry_(geometry), coord_(coord) {
  if (!(geometry_.half_length > 0.0)) throw InvalidConfiguration("box half-length must be positive");
  log_norm_ = -0.5 * std::lgamma(flow_.n_dims() + 1.0);
}

PsiValue WaveflowModel::psi(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_particles()) throw InvalidConfiguration("wrong number of coordinates");
  for (double xi : x) {
    if (!(std::abs(xi) <= geometry_.half_length)) throw DomainError("particle outside the box");
  }
  std::vector<double> sorted;
  const int parity = sort_parity(x, &sorted);
  PsiValue out;
  out.log_abs = -std::numeric_limits<double>::infinity();
  if (parity == 0) return out;
  const LogPsi<double> lp =
      log_psi_sorted<double, double>(std::span<const double>(flow_.params()), std::span<const double>(sorted));
  if (lp.zero) return out;
  out.sign = parity * lp.sign;
  out.log_abs = lp.log_abs;
  out.value = out.sign * std::exp(lp.log_abs);
  return out;
}

std::vector<double> WaveflowModel::sample(Rng& rng) const {
  const std::vector<double> u = flow_.sample(rng);
  std::vector<double> x = from_relative(coord_, u, geometry_.half_length);
  // Guard against round-off pushing a particle out of the box or out of order.
  const double L = geometry_.half_length;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::clamp(x[i], -L, L);
    if (i > 0) x[i] = std::max(x[i], x[i - 1]);
  }
  return x;
}

double potential(const HamiltonianSpec& spec, std::span<const double> x) {
  auto soft = [&](double r) { return 1.0 / std::sqrt(spec.softening * spec.softening + r * r); };
  double v = 0.0;
  switch (spec.kind) {
    case HamiltonianKind::FreeBox:
      return 0.0;
    case HamiltonianKind::SoftCoulombHelium:
      for (double xi : x) v -= spec.charge * soft(xi);
      break;
    case HamiltonianKind::Custom:
      for (double xi : x) v += 0.5 * spec.omega * spec.omega * xi * xi;
      break;
  }
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) v += spec.interaction * soft(x[i] - x[j]);
  return v;
}

double local_energy(const WaveflowModel& model, const HamiltonianSpec& spec, std::span<const double> x) {
  std::vector<double> sorted;
  if (sort_parity(x, &sorted) == 0) throw NodeProximity("coincident particles");
  const std::span<const double> params(model.flow().params());
  using J = ad::Taylor2<double>;
  const auto r = local_energy_jets<double>(
      [&](std::span<const J> xs) { return model.log_psi_sorted<J, double>(params, xs); }, sorted,
      potential(spec, sorted));
  return r.energy;
}

LocalEnergyT<ad::Var> local_energy_recorded(const WaveflowModel& model, const HamiltonianSpec& spec,
                                            std::span<const ad::Var> params, std::span<const double> sorted_x) {
  using J = ad::Taylor2<ad::Var>;
  return local_energy_jets<ad::Var>(
      [&](std::span<const J> xs) { return model.log_psi_sorted<J, ad::Var>(params, xs); }, sorted_x,
      potential(spec, sorted_x));
}

}  // namespace waveflow
