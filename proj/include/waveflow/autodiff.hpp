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

// Differentiation machinery.
//
// Two scalar types compose here:
//   * `Var`        a reverse-mode scalar recorded on a thread-local `Tape`;
//                  used for gradients with respect to network weights.
//   * `Taylor2<T>` a truncated second-order Taylor jet in one input
//                  direction; used for Laplacians.
//
// `Taylor2<Var>` nests the two, so a loss that contains second input
// derivatives can itself be differentiated with respect to the weights.
// Every model routine is written once, templated on its scalar, and is
// instantiated with double, Var, Taylor2<double> and Taylor2<Var>.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "waveflow/errors.hpp"

namespace waveflow::ad {

class Tape {
 public:
  /// Records a node; parents with id < 0 (constants) must already be filtered out.
  std::int32_t record(double value, const std::int32_t* parents, const double* partials, int count,
                      const char* op);
  std::int32_t leaf(double value);

  std::size_t size() const noexcept { return offsets_.size(); }
  void clear();

  /// Adjoint sweep from `output`; returns d output / d node for the first `n_leaves` nodes.
  Eigen::VectorXd backward(std::int32_t output, std::size_t n_leaves) const;

 private:
  std::vector<std::uint32_t> offsets_;  // start of each node's parent range
  std::vector<std::int32_t> parents_;
  std::vector<double> partials_;
  mutable std::vector<double> adjoint_;
};

/// The tape that `Var` operations record onto in the current thread.
Tape* active_tape() noexcept;

/// Installs `tape` as the active tape for the lifetime of the scope.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

struct Var {
  double v = 0.0;
  std::int32_t id = -1;  // -1: constant, not on the tape

  constexpr Var() = default;
  constexpr Var(double c) : v(c) {}  // NOLINT(google-explicit-constructor)
  constexpr Var(double value, std::int32_t node) : v(value), id(node) {}

  constexpr bool is_constant() const noexcept { return id < 0; }
};

namespace detail {

Var unary(const Var& x, double value, double partial, const char* op);
Var binary(const Var& a, double pa, const Var& b, double pb, double value, const char* op);

}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
  return detail::binary(a, 1.0, b, 1.0, a.v + b.v, "add");
}
inline Var operator-(const Var& a, const Var& b) {
  return detail::binary(a, 1.0, b, -1.0, a.v - b.v, "sub");
}
inline Var operator-(const Var& a) { return detail::unary(a, -a.v, -1.0, "neg"); }
inline Var operator*(const Var& a, const Var& b) {
  if ((a.is_constant() && a.v == 0.0) || (b.is_constant() && b.v == 0.0)) return Var(0.0);
  return detail::binary(a, b.v, b, a.v, a.v * b.v, "mul");
}
inline Var operator/(const Var& a, const Var& b) {
  const double q = a.v / b.v;
  return detail::binary(a, 1.0 / b.v, b, -q / b.v, q, "div");
}
inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

inline Var exp(const Var& x) {
  const double e = std::exp(x.v);
  return detail::unary(x, e, e, "exp");
}
inline Var log(const Var& x) { return detail::unary(x, std::log(x.v), 1.0 / x.v, "log"); }
inline Var sqrt(const Var& x) {
  const double s = std::sqrt(x.v);
  return detail::unary(x, s, 0.5 / s, "sqrt");
}
inline Var tanh(const Var& x) {
  const double t = std::tanh(x.v);
  return detail::unary(x, t, 1.0 - t * t, "tanh");
}
inline Var sin(const Var& x) { return detail::unary(x, std::sin(x.v), std::cos(x.v), "sin"); }
inline Var cos(const Var& x) { return detail::unary(x, std::cos(x.v), -std::sin(x.v), "cos"); }

/// bias + sum_j w[j] * h[j] as a single tape node.
Var affine(const Var& bias, std::span<const Var> w, std::span<const Var> h);
/// bias + sum_j w[j] * h[j] with constant coefficients.
Var affine(const Var& bias, std::span<const double> w, std::span<const Var> h);
/// sum_j h[j] as a single node.
Var sum(std::span<const Var> h);

/// Second-order Taylor jet of a scalar along one input direction.
template <class T>
struct Taylor2 {
  T v{};
  T d1{};
  T d2{};

  Taylor2() = default;
  Taylor2(double c) : v(c), d1(0.0), d2(0.0) {}  // NOLINT(google-explicit-constructor)
  Taylor2(T value, T first, T second) : v(value), d1(first), d2(second) {}

  /// x with dx/dt = 1 along the active direction.
  static Taylor2 seed(T value) { return {value, T(1.0), T(0.0)}; }
};

template <class T>
Taylor2<T> operator+(const Taylor2<T>& a, const Taylor2<T>& b) {
  return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2};
}
template <class T>
Taylor2<T> operator-(const Taylor2<T>& a, const Taylor2<T>& b) {
  return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2};
}
template <class T>
Taylor2<T> operator-(const Taylor2<T>& a) {
  return {-a.v, -a.d1, -a.d2};
}
template <class T>
Taylor2<T> operator*(const Taylor2<T>& a, const Taylor2<T>& b) {
  return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + T(2.0) * (a.d1 * b.d1) + a.v * b.d2};
}
template <class T>
Taylor2<T> operator+(const Taylor2<T>& a, double c) {
  return {a.v + T(c), a.d1, a.d2};
}
template <class T>
Taylor2<T> operator+(double c, const Taylor2<T>& a) {
  return a + c;
}
template <class T>
Taylor2<T> operator-(const Taylor2<T>& a, double c) {
  return {a.v - T(c), a.d1, a.d2};
}
template <class T>
Taylor2<T> operator-(double c, const Taylor2<T>& a) {
  return {T(c) - a.v, -a.d1, -a.d2};
}
template <class T>
Taylor2<T> operator*(const Taylor2<T>& a, double c) {
  return {a.v * T(c), a.d1 * T(c), a.d2 * T(c)};
}
template <class T>
Taylor2<T> operator*(double c, const Taylor2<T>& a) {
  return a * c;
}
template <class T>
Taylor2<T> operator/(const Taylor2<T>& a, double c) {
  return a * (1.0 / c);
}

/// Composes an outer function with value f0 and derivatives f1, f2 (at x.v) with the jet x.
template <class T>
Taylor2<T> chain(const Taylor2<T>& x, const T& f0, const T& f1, const T& f2) {
  return {f0, f1 * x.d1, f2 * (x.d1 * x.d1) + f1 * x.d2};
}

template <class T>
Taylor2<T> reciprocal(const Taylor2<T>& x) {
  const T r = T(1.0) / x.v;
  const T r2 = r * r;
  return chain(x, r, -r2, T(2.0) * (r2 * r));
}
template <class T>
Taylor2<T> operator/(const Taylor2<T>& a, const Taylor2<T>& b) {
  return a * reciprocal(b);
}
template <class T>
Taylor2<T> operator/(double c, const Taylor2<T>& b) {
  return reciprocal(b) * c;
}
template <class T>
Taylor2<T>& operator+=(Taylor2<T>& a, const Taylor2<T>& b) {
  return a = a + b;
}
template <class T>
Taylor2<T>& operator-=(Taylor2<T>& a, const Taylor2<T>& b) {
  return a = a - b;
}
template <class T>
Taylor2<T>& operator*=(Taylor2<T>& a, const Taylor2<T>& b) {
  return a = a * b;
}

template <class T>
Taylor2<T> exp(const Taylor2<T>& x) {
  using std::exp;
  const T e = exp(x.v);
  return chain(x, e, e, e);
}
template <class T>
Taylor2<T> log(const Taylor2<T>& x) {
  using std::log;
  const T r = T(1.0) / x.v;
  return chain(x, log(x.v), r, -(r * r));
}
template <class T>
Taylor2<T> sqrt(const Taylor2<T>& x) {
  using std::sqrt;
  const T s = sqrt(x.v);
  const T f1 = T(0.5) / s;
  return chain(x, s, f1, -(f1 / (T(2.0) * x.v)));
}
template <class T>
Taylor2<T> tanh(const Taylor2<T>& x) {
  using std::tanh;
  const T t = tanh(x.v);
  const T f1 = T(1.0) - t * t;
  return chain(x, t, f1, T(-2.0) * (t * f1));
}
template <class T>
Taylor2<T> sin(const Taylor2<T>& x) {
  using std::cos;
  using std::sin;
  const T s = sin(x.v);
  return chain(x, s, cos(x.v), -s);
}
template <class T>
Taylor2<T> cos(const Taylor2<T>& x) {
  using std::cos;
  using std::sin;
  const T c = cos(x.v);
  return chain(x, c, -sin(x.v), -c);
}

// ---------------------------------------------------------------------------
// Scalar-generic helpers used by the model code.

inline double primal(double x) { return x; }
inline double primal(const Var& x) { return x.v; }
template <class T>
double primal(const Taylor2<T>& x) {
  return primal(x.v);
}

/// Number of input derivatives a scalar type carries through a primitive
/// (double 0, Var 1, Taylor2<double> 2, Taylor2<Var> 3).
template <class S>
inline constexpr int derivative_depth = 0;
template <>
inline constexpr int derivative_depth<Var> = 1;
template <class T>
inline constexpr int derivative_depth<Taylor2<T>> = derivative_depth<T> + 2;

template <class S>
inline constexpr bool is_taylor = false;
template <class T>
inline constexpr bool is_taylor<Taylor2<T>> = true;

/// Derivative stack f, f', f'', f''' of a scalar function at a point.
using Derivs = std::array<double, 4>;

inline double apply(double, const Derivs& f) { return f[0]; }
inline Var apply(const Var& x, const Derivs& f) { return detail::unary(x, f[0], f[1], "spline"); }
template <class T>
Taylor2<T> apply(const Taylor2<T>& x, const Derivs& f) {
  const Derivs f1{f[1], f[2], f[3], 0.0};
  const Derivs f2{f[2], f[3], 0.0, 0.0};
  return chain(x, apply(x.v, f), apply(x.v, f1), apply(x.v, f2));
}

/// |x| for a scalar whose primal is nonzero.
template <class S>
S abs_of(const S& x) {
  return primal(x) < 0.0 ? S(-x) : x;
}

/// bias + sum_j w[j] * h[j] for any scalar/weight combination.
inline double affine(double bias, std::span<const double> w, std::span<const double> h) {
  double acc = bias;
  for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * h[j];
  return acc;
}
template <class T, class W>
Taylor2<T> affine(const W& bias, std::span<const W> w, std::span<const Taylor2<T>> h) {
  // One buffer per instantiation; the inner calls are non-template overloads.
  thread_local std::vector<T> buf;
  const std::size_t n = h.size();
  buf.resize(3 * n);
  for (std::size_t j = 0; j < n; ++j) {
    buf[j] = h[j].v;
    buf[n + j] = h[j].d1;
    buf[2 * n + j] = h[j].d2;
  }
  const std::span<const T> all(buf);
  return {affine(T(bias), w, all.subspan(0, n)), affine(T(0.0), w, all.subspan(n, n)),
          affine(T(0.0), w, all.subspan(2 * n, n))};
}

// ---------------------------------------------------------------------------
// Entry points.

/// Flat gradient with respect to every trainable weight, in canonical order.
using ParamGradient = Eigen::VectorXd;

/// Sum of pure second derivatives of `f` at `x`, one Taylor pass per coordinate.
/// `f` is invoked with a std::vector<Taylor2<double>> and must return Taylor2<double>.
template <class F>
double laplacian(F&& f, std::span<const double> x) {
  double total = 0.0;
  std::vector<Taylor2<double>> jet(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) jet[j] = Taylor2<double>(x[j]);
    jet[i] = Taylor2<double>::seed(x[i]);
    const Taylor2<double> out = f(jet);
    total += out.d2;
  }
  return total;
}

/// Exact gradient of a scalar loss with respect to `params`. `loss` receives a
/// std::span<const Var> of leaves and returns a Var.
template <class F>
ParamGradient grad_params(F&& loss, std::span<const double> params, double* value = nullptr) {
  Tape tape;
  TapeScope scope(tape);
  std::vector<Var> leaves(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) leaves[i] = Var(params[i], tape.leaf(params[i]));
  const Var out = loss(std::span<const Var>(leaves));
  if (value != nullptr) *value = out.v;
  if (out.is_constant()) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
  return tape.backward(out.id, params.size());
}

}  // namespace waveflow::ad
