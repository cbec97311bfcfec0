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

#include <doctest.h>

#include "waveflow/config.hpp"

using namespace waveflow;

TEST_CASE("defaults describe the reference experiment") {
  const RunConfig c;
  CHECK(c.system.hamiltonian.kind == HamiltonianKind::SoftCoulombHelium);
  CHECK(c.system.hamiltonian.n_particles == 2);
  CHECK(c.system.half_length == 10.0);
  CHECK(c.model.order == 5);
  CHECK(c.model.n_knots == 23);
  CHECK(c.n_basis() == 18);
  CHECK(c.model.n_layers == 3);
  CHECK(c.model.hidden_width == 64);
  CHECK(c.model.coordinates == CoordinateChoice::Mean);
  CHECK(c.training.learning_rate == 1e-4);
  CHECK(c.training.batch_size == 128);
  CHECK(c.training.epochs == 60000);
  CHECK(c.training.baseline_window == 100);
  CHECK(c.training.variance_window == 5000);
  CHECK(parse_config("").n_basis() == 18);
}

TEST_CASE("parse and serialize round trip") {
  const std::string text = R"(# comment
[system]
hamiltonian = "free_box"   # trailing comment
n_particles = 3
half_length = 5

[model]
order = 4
n_knots = 15
coordinates = "first"
eps_regularize = 2.5e-4

[training]
learning_rate = 0.001
epochs = 15_000
seed = 18446744073709551615

[output]
directory = "runs/a#b"
)";
  const RunConfig a = parse_config(text);
  CHECK(a.system.hamiltonian.kind == HamiltonianKind::FreeBox);
  CHECK(a.system.hamiltonian.n_particles == 3);
  CHECK(a.model.coordinates == CoordinateChoice::First);
  CHECK(a.training.epochs == 15000);
  CHECK(a.training.seed == 18446744073709551615ULL);
  CHECK(a.output.directory == "runs/a#b");
  const std::string once = serialize_config(a);
  const RunConfig b = parse_config(once);
  CHECK(serialize_config(b) == once);
  CHECK(b.model.eps_regularize == a.model.eps_regularize);
  CHECK(b.training.learning_rate == a.training.learning_rate);
  CHECK(serialize_config(parse_config(serialize_config(RunConfig{}))) == serialize_config(RunConfig{}));
}

TEST_CASE("errors carry line numbers") {
  auto line_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("[system]\nfoo = 1\n") == 2);
  CHECK(line_of("[nope]\n") == 1);
  CHECK(line_of("[model]\norder = 5\norder = 6\n") == 3);
  CHECK(line_of("[model]\norder = five\n") == 2);
  CHECK(line_of("[model]\ncoordinates = \"sideways\"\n") == 2);
  CHECK(line_of("order = 5\n") == 1);
  CHECK(line_of("[model]\norder 5\n") == 2);
  CHECK(line_of("[model]\norder = 2\n") == 0);
  CHECK(line_of("[training]\nbatch_size = 1\n") == 0);
  CHECK_THROWS_AS(load_config("/nonexistent/waveflow.toml"), ConfigError);
}
