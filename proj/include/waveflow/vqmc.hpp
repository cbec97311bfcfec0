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

// Variational Monte Carlo: exact batches from psi^2, the score-function gradient
// with a running baseline, Adam, and windowed energy statistics.

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "waveflow/physics.hpp"
#include "waveflow/rng.hpp"

namespace waveflow {

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 128;
  int epochs = 60000;
  std::uint64_t seed = 0;
  int baseline_window = 100;
  int variance_window = 5000;
  double clip_norm = 100.0;
  int max_resample = 16;
  int workers = 1;
};

void validate(const TrainConfig& cfg);

class AdamState {
 public:
  AdamState(std::size_t n_params, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
            double eps = 1e-8);

  void step(std::vector<double>& params, const Eigen::VectorXd& grad);

  std::int64_t steps() const noexcept { return t_; }
  const Eigen::VectorXd& first_moment() const noexcept { return m_; }
  const Eigen::VectorXd& second_moment() const noexcept { return v_; }

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  std::int64_t t_ = 0;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
};

/// Fixed-capacity window with mean and (population) variance.
class RingWindow {
 public:
  explicit RingWindow(int capacity);
  void push(double x);
  int size() const noexcept { return static_cast<int>(values_.size()); }
  int capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return values_.empty(); }
  double mean() const;
  double variance() const;
  const std::deque<double>& values() const noexcept { return values_; }

 private:
  int capacity_;
  std::deque<double> values_;
};

class EnergyTracker {
 public:
  EnergyTracker(int baseline_window, int variance_window);
  void push(double epoch_energy);
  bool empty() const noexcept { return baseline_.empty(); }
  /// Mean of the last baseline_window epochs (fewer during warm-up).
  double baseline() const { return baseline_.mean(); }
  double running_mean() const { return variance_.mean(); }
  double running_variance() const { return variance_.variance(); }
  const RingWindow& baseline_window() const noexcept { return baseline_; }
  const RingWindow& variance_window() const noexcept { return variance_; }

 private:
  RingWindow baseline_;
  RingWindow variance_;
};

struct EpochResult {
  double energy = 0.0;
  double grad_norm = 0.0;
  double baseline = 0.0;
};

/// Raw gradient estimate (before clipping) and batch statistics.
struct BatchGradient {
  Eigen::VectorXd grad;
  double energy = 0.0;
  double baseline = 0.0;
  std::vector<double> local_energies;
};

/// Draws `n_samples` exact samples (slot s uses a stream derived from `stream_seed` and s)
/// and returns (1/N) sum [grad log psi^2 (E_L - b) + grad E_L]. When `baseline` is empty the
/// batch mean is used.
BatchGradient batch_gradient(const WaveflowModel& model, const HamiltonianSpec& spec, int n_samples,
                             std::uint64_t stream_seed, const double* baseline, int max_resample = 16,
                             int workers = 1);

/// One optimizer step on one batch.
EpochResult epoch_step(WaveflowModel& model, const HamiltonianSpec& spec, const TrainConfig& cfg, AdamState& adam,
                       EnergyTracker& tracker, Rng& rng);

struct EnergyEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double variance = 0.0;
};

EnergyEstimate estimate_energy(const WaveflowModel& model, const HamiltonianSpec& spec, int n_samples, Rng& rng,
                               int workers = 1);

/// <psi|H|psi> of a one-particle model by composite Gauss-Legendre quadrature over the box.
double quadrature_energy(const WaveflowModel& model, const HamiltonianSpec& spec, int panels = 256);

struct GradientCheckReport {
  Eigen::VectorXd monte_carlo;
  Eigen::VectorXd finite_difference;
  /// max_i |mc_i - fd_i| / max_j |fd_j|.
  double max_relative_deviation = 0.0;
};

/// Monte Carlo gradient against the central-difference gradient of quadrature_energy.
GradientCheckReport gradient_check(const WaveflowModel& model, const HamiltonianSpec& spec, Rng& rng,
                                   int n_samples = 1'000'000, double fd_step = 1e-5);

struct TrainSummary {
  int epochs = 0;
  double energy_mean = 0.0;
  double energy_std = 0.0;
  double last_baseline = 0.0;
};

struct TrainHooks {
  /// Receives one JSON object per epoch (no trailing newline).
  std::function<void(const std::string&)> log_line;
  /// Called every `checkpoint_every` epochs and after the last one.
  std::function<void(int epoch)> checkpoint;
  int checkpoint_every = 0;
};

/// Runs cfg.epochs epoch steps; the summary follows the variance-window protocol.
TrainSummary train(WaveflowModel& model, const HamiltonianSpec& spec, const TrainConfig& cfg,
                   const TrainHooks& hooks = {});

}  // namespace waveflow
