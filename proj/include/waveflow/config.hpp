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

// Run configuration in a small TOML subset: [section] headers, key = value lines,
// values are numbers, booleans or double-quoted strings, '#' starts a comment.

#pragma once

#include <filesystem>
#include <string>

#include "waveflow/flow.hpp"
#include "waveflow/physics.hpp"
#include "waveflow/vqmc.hpp"

namespace waveflow {

struct SystemSection {
  HamiltonianSpec hamiltonian;
  double half_length = 10.0;
};

struct ModelSection {
  int order = 5;
  /// Total knot count, clamped ends included; n_basis = n_knots - order.
  int n_knots = 23;
  int n_layers = 3;
  int hidden_width = 64;
  int n_hidden_layers = 1;
  CoordinateChoice coordinates = CoordinateChoice::Mean;
  double eps_regularize = 1e-4;
};

struct OutputSection {
  std::string directory = "out";
  /// Checkpoint cadence in epochs; 0 writes only the final checkpoint.
  int checkpoint_every = 1000;
};

struct OracleSection {
  int grid_points = 301;
  /// Second grid for extrapolation; 0 disables it.
  int coarse_grid_points = 201;
  int n_states = 4;
  int memory_cap_mb = 2048;
};

struct RunConfig {
  SystemSection system;
  ModelSection model;
  TrainConfig training;
  OutputSection output;
  OracleSection oracle;

  int n_basis() const noexcept { return model.n_knots - model.order; }
  FlowConfig flow_config() const;
  WaveflowModel make_model() const;
};

/// Throws ConfigError with the offending line on syntax, key or value errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& config);
/// Semantic checks shared by the parser and programmatic construction.
void validate(const RunConfig& config);

}  // namespace waveflow
