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

#include "waveflow/vqmc.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include <json.hpp>

#include "waveflow/quadrature.hpp"

namespace waveflow {

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw InvalidConfiguration("learning_rate must be positive");
  if (cfg.batch_size < 2) throw InvalidConfiguration("batch_size must be at least 2");
  if (cfg.epochs < 1) throw InvalidConfiguration("epochs must be positive");
  if (cfg.baseline_window < 1 || cfg.variance_window < 1) throw InvalidConfiguration("windows must be positive");
  if (!(cfg.clip_norm > 0.0)) throw InvalidConfiguration("clip_norm must be positive");
  if (cfg.max_resample < 0) throw InvalidConfiguration("max_resample must be non-negative");
  if (cfg.workers < 1) throw InvalidConfiguration("workers must be positive");
}

AdamState::AdamState(std::size_t n_params, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps),
      m_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_params))),
      v_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_params))) {}

void AdamState::step(std::vector<double>& params, const Eigen::VectorXd& grad) {
  if (grad.size() != m_.size() || params.size() != static_cast<std::size_t>(m_.size()))
    throw InvalidConfiguration("Adam state size does not match the parameters");
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Eigen::Index i = 0; i < m_.size(); ++i) {
    const double mh = m_[i] / c1;
    const double vh = v_[i] / c2;
    params[static_cast<std::size_t>(i)] -= lr_ * mh / (std::sqrt(vh) + eps_);
  }
}

RingWindow::RingWindow(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw InvalidConfiguration("window capacity must be positive");
}

void RingWindow::push(double x) {
  values_.push_back(x);
  if (static_cast<int>(values_.size()) > capacity_) values_.pop_front();
}

double RingWindow::mean() const {
  if (values_.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double v : values_) s += v;
  return s / static_cast<double>(values_.size());
}

double RingWindow::variance() const {
  if (values_.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double mu = mean();
  double s = 0.0;
  for (double v : values_) s += (v - mu) * (v - mu);
  return s / static_cast<double>(values_.size());
}

EnergyTracker::EnergyTracker(int baseline_window, int variance_window)
    : baseline_(baseline_window), variance_(variance_window) {}

void EnergyTracker::push(double epoch_energy) {
  baseline_.push(epoch_energy);
  variance_.push(epoch_energy);
}

namespace {

struct SlotResult {
  double energy = 0.0;
  Eigen::VectorXd grad_log_psi;
  Eigen::VectorXd grad_energy;
};

template <class F>
void parallel_for(int n, int workers, F&& body) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (int i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

SlotResult run_slot(const WaveflowModel& model, const HamiltonianSpec& spec, std::uint64_t stream_seed, int slot,
                    int max_resample) {
  thread_local ad::Tape tape;
  const std::vector<double>& params = model.flow().params();
  const std::size_t np = params.size();
  std::vector<ad::Var> leaves(np);
  for (int attempt = 0; attempt <= max_resample; ++attempt) {
    Rng rng = derive_rng(stream_seed, static_cast<std::uint64_t>(slot), static_cast<std::uint64_t>(attempt));
    const std::vector<double> x = model.sample(rng);
    tape.clear();
    ad::TapeScope scope(tape);
    for (std::size_t i = 0; i < np; ++i) leaves[i] = ad::Var(params[i], tape.leaf(params[i]));
    try {
      const LocalEnergyT<ad::Var> r =
          local_energy_recorded(model, spec, std::span<const ad::Var>(leaves), std::span<const double>(x));
      SlotResult out;
      out.energy = r.energy.v;
      const auto zeros = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(np));
      out.grad_energy = r.energy.is_constant() ? Eigen::VectorXd(zeros) : tape.backward(r.energy.id, np);
      out.grad_log_psi = r.log_abs.is_constant() ? Eigen::VectorXd(zeros) : tape.backward(r.log_abs.id, np);
      return out;
    } catch (const NodeProximity&) {
    } catch (const NonFiniteError&) {
    }
  }
  throw NodeProximity("sample slot " + std::to_string(slot) + " hit a node on every retry");
}

double local_energy_with_retries(const WaveflowModel& model, const HamiltonianSpec& spec, std::uint64_t stream_seed,
                                 int slot, int max_resample) {
  for (int attempt = 0; attempt <= max_resample; ++attempt) {
    Rng rng = derive_rng(stream_seed, static_cast<std::uint64_t>(slot), static_cast<std::uint64_t>(attempt));
    const std::vector<double> x = model.sample(rng);
    try {
      const double e = local_energy(model, spec, x);
      if (std::isfinite(e)) return e;
    } catch (const NodeProximity&) {
    }
  }
  throw NodeProximity("sample slot " + std::to_string(slot) + " hit a node on every retry");
}

}  // namespace

BatchGradient batch_gradient(const WaveflowModel& model, const HamiltonianSpec& spec, int n_samples,
                             std::uint64_t stream_seed, const double* baseline, int max_resample, int workers) {
  if (n_samples < 1) throw InvalidConfiguration("batch must contain at least one sample");
  std::vector<SlotResult> slots(static_cast<std::size_t>(n_samples));
  parallel_for(n_samples, workers, [&](int s) {
    slots[static_cast<std::size_t>(s)] = run_slot(model, spec, stream_seed, s, max_resample);
  });
  const auto np = static_cast<Eigen::Index>(model.flow().n_params());
  BatchGradient out;
  out.local_energies.reserve(slots.size());
  double sum = 0.0;
  for (const SlotResult& r : slots) {
    sum += r.energy;
    out.local_energies.push_back(r.energy);
  }
  out.energy = sum / n_samples;
  out.baseline = baseline != nullptr ? *baseline : out.energy;
  out.grad = Eigen::VectorXd::Zero(np);
  for (const SlotResult& r : slots) out.grad += 2.0 * (r.energy - out.baseline) * r.grad_log_psi + r.grad_energy;
  out.grad /= n_samples;
  return out;
}

EpochResult epoch_step(WaveflowModel& model, const HamiltonianSpec& spec, const TrainConfig& cfg, AdamState& adam,
                       EnergyTracker& tracker, Rng& rng) {
  const std::uint64_t stream_seed = rng();
  const double b = tracker.empty() ? 0.0 : tracker.baseline();
  BatchGradient g = batch_gradient(model, spec, cfg.batch_size, stream_seed, tracker.empty() ? nullptr : &b,
                                   cfg.max_resample, cfg.workers);
  EpochResult out;
  out.energy = g.energy;
  out.baseline = g.baseline;
  out.grad_norm = g.grad.norm();
  if (!std::isfinite(out.grad_norm)) throw NonFiniteError("gradient");
  if (out.grad_norm > cfg.clip_norm) g.grad *= cfg.clip_norm / out.grad_norm;
  adam.step(model.mutable_flow().mutable_params(), g.grad);
  tracker.push(g.energy);
  return out;
}

EnergyEstimate estimate_energy(const WaveflowModel& model, const HamiltonianSpec& spec, int n_samples, Rng& rng,
                               int workers) {
  if (n_samples < 2) throw InvalidConfiguration("need at least two samples for an energy estimate");
  const std::uint64_t stream_seed = rng();
  std::vector<double> e(static_cast<std::size_t>(n_samples));
  parallel_for(n_samples, workers, [&](int s) {
    e[static_cast<std::size_t>(s)] = local_energy_with_retries(model, spec, stream_seed, s, 16);
  });
  EnergyEstimate out;
  double sum = 0.0;
  for (double v : e) sum += v;
  out.mean = sum / n_samples;
  double sq = 0.0;
  for (double v : e) sq += (v - out.mean) * (v - out.mean);
  out.variance = sq / (n_samples - 1);
  out.std_error = std::sqrt(out.variance / n_samples);
  return out;
}

double quadrature_energy(const WaveflowModel& model, const HamiltonianSpec& spec, int panels) {
  if (model.n_particles() != 1) throw InvalidConfiguration("quadrature energy is implemented for one particle");
  const double L = model.geometry().half_length;
  const GaussLegendre rule(8);
  return integrate(
      [&](double x) {
        const double xs[1] = {x};
        const PsiValue p = model.psi(xs);
        if (p.sign == 0) return 0.0;
        return p.value * p.value * local_energy(model, spec, xs);
      },
      -L, L, panels, rule);
}

GradientCheckReport gradient_check(const WaveflowModel& model, const HamiltonianSpec& spec, Rng& rng, int n_samples,
                                   double fd_step) {
  if (model.n_particles() != 1) throw InvalidConfiguration("gradient_check needs a one-particle model");
  GradientCheckReport report;
  // Exact baseline from quadrature keeps the estimator's variance low; it does not bias it.
  const double e0 = quadrature_energy(model, spec);
  const int chunk = 4096;
  const auto np = static_cast<Eigen::Index>(model.flow().n_params());
  report.monte_carlo = Eigen::VectorXd::Zero(np);
  const std::uint64_t seed = rng();
  int done = 0;
  for (int c = 0; done < n_samples; ++c) {
    const int m = std::min(chunk, n_samples - done);
    const BatchGradient g = batch_gradient(model, spec, m, derive_rng(seed, static_cast<std::uint64_t>(c))(), &e0);
    report.monte_carlo += g.grad * m;
    done += m;
  }
  report.monte_carlo /= n_samples;

  WaveflowModel probe = model;
  std::vector<double>& p = probe.mutable_flow().mutable_params();
  report.finite_difference.resize(np);
  for (Eigen::Index i = 0; i < np; ++i) {
    const double orig = p[static_cast<std::size_t>(i)];
    p[static_cast<std::size_t>(i)] = orig + fd_step;
    const double up = quadrature_energy(probe, spec);
    p[static_cast<std::size_t>(i)] = orig - fd_step;
    const double down = quadrature_energy(probe, spec);
    p[static_cast<std::size_t>(i)] = orig;
    report.finite_difference[i] = (up - down) / (2.0 * fd_step);
  }
  const double scale = report.finite_difference.cwiseAbs().maxCoeff();
  report.max_relative_deviation =
      (report.monte_carlo - report.finite_difference).cwiseAbs().maxCoeff() / std::max(scale, 1e-300);
  return report;
}

TrainSummary train(WaveflowModel& model, const HamiltonianSpec& spec, const TrainConfig& cfg,
                   const TrainHooks& hooks) {
  validate(cfg);
  Rng rng = derive_rng(cfg.seed, 0x747261696eULL);
  AdamState adam(model.flow().n_params(), cfg.learning_rate);
  EnergyTracker tracker(cfg.baseline_window, cfg.variance_window);
  TrainSummary summary;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const EpochResult r = epoch_step(model, spec, cfg, adam, tracker, rng);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (!std::isfinite(r.energy)) throw NonFiniteError("epoch energy");
    if (hooks.log_line) {
      nlohmann::json line{{"epoch", epoch},
                          {"energy", r.energy},
                          {"baseline", r.baseline},
                          {"running_variance", tracker.running_variance()},
                          {"grad_norm", r.grad_norm},
                          {"wall_ms", ms}};
      hooks.log_line(line.dump());
    }
    const bool last = epoch + 1 == cfg.epochs;
    if (hooks.checkpoint && (last || (hooks.checkpoint_every > 0 && (epoch + 1) % hooks.checkpoint_every == 0)))
      hooks.checkpoint(epoch + 1);
    summary.epochs = epoch + 1;
  }
  summary.energy_mean = tracker.running_mean();
  summary.energy_std = std::sqrt(tracker.running_variance());
  summary.last_baseline = tracker.baseline();
  return summary;
}

}  // namespace waveflow
