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

#pragma once

#include <stdexcept>
#include <string>

namespace waveflow {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidConfiguration : public Error {
 public:
  using Error::Error;
};

/// An input coordinate lies outside the domain an operation is defined on.
class DomainError : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class DegenerateWeights : public Error {
 public:
  using Error::Error;
};

/// Rejection sampling gave up; the density exceeded its advertised bound.
class PathologicalDensity : public Error {
 public:
  using Error::Error;
};

/// Second derivatives were requested at a knot where the spline is not C^2.
class NonSmoothPoint : public Error {
 public:
  using Error::Error;
};

/// A non-finite value appeared on the gradient tape. `op` names the primitive.
class NonFiniteError : public Error {
 public:
  explicit NonFiniteError(std::string op)
      : Error("non-finite value produced by operation '" + op + "'"), op_(std::move(op)) {}
  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

/// |psi| is too small to form Hpsi/psi reliably.
class NodeProximity : public Error {
 public:
  using Error::Error;
};

class UnsupportedEnforcementPoint : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class TooLarge : public Error {
 public:
  using Error::Error;
};

class InsufficientStates : public Error {
 public:
  using Error::Error;
};

class CheckpointMismatch : public Error {
 public:
  using Error::Error;
};

/// Configuration text could not be parsed; carries the offending line (1-based, 0 if unknown).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line) : Error(format(what, line)), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& what, int line) {
    return line > 0 ? "line " + std::to_string(line) + ": " + what : what;
  }
  int line_;
};

}  // namespace waveflow
