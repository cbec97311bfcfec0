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

// The fast property suite behind `waveflow check`.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "waveflow/config.hpp"
#include "waveflow/spline.hpp"

namespace waveflow {

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Measured quantity and the bound it is compared against.
  double value = 0.0;
  double bound = 0.0;
  std::string detail;
  double seconds = 0.0;
};

struct CheckContext {
  RunConfig config;
  std::uint64_t seed = 1;
  /// Applied to the spline space under test before any spline property runs.
  std::function<void(SplineSpace&)> tamper;
  /// Monte Carlo samples of the gradient check.
  int gradient_samples = 1'000'000;
  /// Property names to run; empty runs all.
  std::vector<std::string> only;
};

std::vector<CheckResult> run_property_suite(const CheckContext& context);

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);
/// Asymptotic p-value of statistic d at sample size n.
double ks_pvalue(double d, std::size_t n);

/// Formats a pass/fail table.
std::string format_results(std::span<const CheckResult> results);

}  // namespace waveflow
