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

// Command-line front end. Exit codes: 0 success, 1 runtime failure, 2 bad configuration,
// bad arguments or unusable checkpoint.

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace waveflow {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

int run_cli(int argc, const char* const* argv);

struct GridSample {
  double x0 = 0.0;
  double x1 = 0.0;
  double psi = 0.0;
};

/// "x0,x1,psi" rows, full precision.
std::string grid_csv(std::span<const GridSample> grid);
/// resolution x resolution heatmap, diverging palette symmetric about zero.
std::string grid_svg(std::span<const GridSample> grid, int resolution);

}  // namespace waveflow
