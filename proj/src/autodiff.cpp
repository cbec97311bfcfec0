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

#include "waveflow/autodiff.hpp"

#include <cmath>

namespace waveflow::ad {

namespace {

thread_local Tape* g_active = nullptr;

Tape& require_tape(const char* op) {
  if (g_active == nullptr) throw Error(std::string("no active tape for operation '") + op + "'");
  return *g_active;
}

}  // namespace

Tape* active_tape() noexcept { return g_active; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active) { g_active = &tape; }
TapeScope::~TapeScope() { g_active = previous_; }

std::int32_t Tape::record(double value, const std::int32_t* parents, const double* partials,
                          int count, const char* op) {
  if (!std::isfinite(value)) throw NonFiniteError(op);
  offsets_.push_back(static_cast<std::uint32_t>(parents_.size()));
  for (int i = 0; i < count; ++i) {
    if (!std::isfinite(partials[i])) throw NonFiniteError(op);
    parents_.push_back(parents[i]);
    partials_.push_back(partials[i]);
  }
  return static_cast<std::int32_t>(offsets_.size() - 1);
}

std::int32_t Tape::leaf(double value) { return record(value, nullptr, nullptr, 0, "leaf"); }

void Tape::clear() {
  offsets_.clear();
  parents_.clear();
  partials_.clear();
}

Eigen::VectorXd Tape::backward(std::int32_t output, std::size_t n_leaves) const {
  adjoint_.assign(static_cast<std::size_t>(output) + 1, 0.0);
  adjoint_[static_cast<std::size_t>(output)] = 1.0;
  const auto n_parents = static_cast<std::uint32_t>(parents_.size());
  for (std::int32_t node = output; node >= 0; --node) {
    const double a = adjoint_[static_cast<std::size_t>(node)];
    if (a == 0.0) continue;
    const std::uint32_t begin = offsets_[static_cast<std::size_t>(node)];
    const std::uint32_t end = static_cast<std::size_t>(node) + 1 < offsets_.size()
                                  ? offsets_[static_cast<std::size_t>(node) + 1]
                                  : n_parents;
    for (std::uint32_t p = begin; p < end; ++p) adjoint_[static_cast<std::size_t>(parents_[p])] += a * partials_[p];
  }
  Eigen::VectorXd grad(static_cast<Eigen::Index>(n_leaves));
  for (std::size_t i = 0; i < n_leaves; ++i) grad[static_cast<Eigen::Index>(i)] = i < adjoint_.size() ? adjoint_[i] : 0.0;
  return grad;
}

namespace detail {

Var unary(const Var& x, double value, double partial, const char* op) {
  if (x.is_constant()) return Var(value);
  return {value, require_tape(op).record(value, &x.id, &partial, 1, op)};
}

Var binary(const Var& a, double pa, const Var& b, double pb, double value, const char* op) {
  if (a.is_constant() && b.is_constant()) return Var(value);
  if (a.is_constant()) return {value, require_tape(op).record(value, &b.id, &pb, 1, op)};
  if (b.is_constant()) return {value, require_tape(op).record(value, &a.id, &pa, 1, op)};
  const std::int32_t ids[2] = {a.id, b.id};
  const double partials[2] = {pa, pb};
  return {value, require_tape(op).record(value, ids, partials, 2, op)};
}

}  // namespace detail

namespace {

thread_local std::vector<std::int32_t> g_ids;
thread_local std::vector<double> g_partials;

Var finish(double value, const char* op) {
  if (g_ids.empty()) return Var(value);
  return {value, require_tape(op).record(value, g_ids.data(), g_partials.data(),
                                         static_cast<int>(g_ids.size()), op)};
}

void push(const Var& x, double partial) {
  if (x.is_constant() || partial == 0.0) return;
  g_ids.push_back(x.id);
  g_partials.push_back(partial);
}

}  // namespace

Var affine(const Var& bias, std::span<const Var> w, std::span<const Var> h) {
  g_ids.clear();
  g_partials.clear();
  double acc = bias.v;
  push(bias, 1.0);
  for (std::size_t j = 0; j < w.size(); ++j) {
    acc += w[j].v * h[j].v;
    push(w[j], h[j].v);
    push(h[j], w[j].v);
  }
  return finish(acc, "affine");
}

Var affine(const Var& bias, std::span<const double> w, std::span<const Var> h) {
  g_ids.clear();
  g_partials.clear();
  double acc = bias.v;
  push(bias, 1.0);
  for (std::size_t j = 0; j < w.size(); ++j) {
    acc += w[j] * h[j].v;
    push(h[j], w[j]);
  }
  return finish(acc, "affine");
}

Var sum(std::span<const Var> h) {
  g_ids.clear();
  g_partials.clear();
  double acc = 0.0;
  for (const Var& x : h) {
    acc += x.v;
    push(x, 1.0);
  }
  return finish(acc, "sum");
}

}  // namespace waveflow::ad
