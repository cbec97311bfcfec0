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

#include "waveflow/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "waveflow/check.hpp"
#include "waveflow/config.hpp"
#include "waveflow/log.hpp"
#include "waveflow/oracle.hpp"
#include "waveflow/vqmc.hpp"

namespace waveflow {

namespace fs = std::filesystem;
using nlohmann::json;

std::string grid_csv(std::span<const GridSample> grid) {
  std::ostringstream out;
  out << std::setprecision(17) << "x0,x1,psi\n";
  for (const GridSample& g : grid) out << g.x0 << ',' << g.x1 << ',' << g.psi << '\n';
  return out.str();
}

namespace {

std::string diverging_color(double t) {
  // t in [-1, 1]: blue through white to red.
  const double s = std::clamp(std::abs(t), 0.0, 1.0);
  const double end[2][3] = {{59, 76, 192}, {180, 4, 38}};
  const double* e = t < 0.0 ? end[0] : end[1];
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(std::lround(255 + (e[0] - 255) * s)),
                static_cast<int>(std::lround(255 + (e[1] - 255) * s)),
                static_cast<int>(std::lround(255 + (e[2] - 255) * s)));
  return buf;
}

}  // namespace

std::string grid_svg(std::span<const GridSample> grid, int resolution) {
  double peak = 0.0;
  for (const GridSample& g : grid) peak = std::max(peak, std::abs(g.psi));
  const int cell = std::max(1, 600 / std::max(resolution, 1));
  const int size = cell * resolution;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" shape-rendering=\"crispEdges\">\n";
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const int i = static_cast<int>(k) / resolution;  // x0 index, horizontal
    const int j = static_cast<int>(k) % resolution;  // x1 index, vertical (up)
    const double t = peak > 0.0 ? grid[k].psi / peak : 0.0;
    out << "<rect x=\"" << i * cell << "\" y=\"" << (resolution - 1 - j) * cell << "\" width=\"" << cell
        << "\" height=\"" << cell << "\" fill=\"" << diverging_color(t) << "\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

namespace {

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
  std::string out_dir;
};

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  if (c.seed_set) cfg.training.seed = c.seed;
  if (c.workers > 0) cfg.training.workers = c.workers;
  if (!c.out_dir.empty()) cfg.output.directory = c.out_dir;
  validate(cfg);
  return cfg;
}

WaveflowModel model_from_checkpoint(const RunConfig& cfg, const std::string& path) {
  WaveflowModel model = cfg.make_model();
  restore_checkpoint(load_checkpoint(path), model.mutable_flow(), cfg.system.half_length);
  return model;
}

int cmd_train(const Common& common, int epochs_override) {
  RunConfig cfg = resolve(common);
  if (epochs_override > 0) cfg.training.epochs = epochs_override;
  validate(cfg);
  const fs::path dir = cfg.output.directory;
  fs::create_directories(dir);
  write_file_atomic(dir / "config.toml", serialize_config(cfg));

  WaveflowModel model = cfg.make_model();
  const fs::path ckpt = dir / "checkpoint.wvfl";
  std::ofstream log_file(dir / "train.jsonl", std::ios::trunc);
  if (!log_file) throw Error("cannot open " + (dir / "train.jsonl").string());

  TrainHooks hooks;
  hooks.log_line = [&](const std::string& line) {
    log_file << line << '\n';
    log::debug(line);
  };
  hooks.checkpoint = [&](int epoch) {
    save_checkpoint(ckpt, model.flow(), cfg.system.half_length);
    log::info("epoch " + std::to_string(epoch) + ": checkpoint written");
  };
  hooks.checkpoint_every = cfg.output.checkpoint_every;

  log::info("training " + std::to_string(cfg.training.epochs) + " epochs, " + std::to_string(model.flow().n_params()) +
            " parameters");
  const TrainSummary summary = train(model, cfg.system.hamiltonian, cfg.training, hooks);
  log_file.flush();
  save_checkpoint(ckpt, model.flow(), cfg.system.half_length);

  const json j = {{"energy_mean", summary.energy_mean},
                  {"energy_std", summary.energy_std},
                  {"epochs", summary.epochs},
                  {"window", cfg.training.variance_window},
                  {"seed", cfg.training.seed}};
  write_file_atomic(dir / "summary.json", j.dump(2) + "\n");
  std::cout << std::setprecision(8) << "energy " << summary.energy_mean << " +- " << summary.energy_std << '\n';
  return kExitOk;
}

struct OracleRun {
  int grid_points = 0;
  double spacing = 0.0;
  EigenResult result;
  SelectedState selected;
};

OracleRun solve_grid(const RunConfig& cfg, int grid_points, int n_states, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t cap = static_cast<std::size_t>(cfg.oracle.memory_cap_mb) << 20;
  const GridHamiltonian h = build_hamiltonian(cfg.system.hamiltonian, cfg.system.half_length, grid_points, cap);
  LanczosOptions opt;
  opt.seed = seed;
  OracleRun run;
  run.grid_points = grid_points;
  run.spacing = h.spacing();
  run.result = lowest_eigenpairs(h, n_states, opt);
  run.selected = h.dims() == 1 ? SelectedState{0, run.result.eigenvalues[0]} : select_antisymmetric(run.result);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream msg;
  msg << std::setprecision(10) << "grid " << grid_points << ": energy " << run.selected.energy << " (state "
      << run.selected.index << ", " << run.result.matvecs << " matvecs, " << secs << " s)";
  log::info(msg.str());
  return run;
}

json run_json(const OracleRun& r) {
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"grid_points", r.grid_points},
          {"spacing", r.spacing},
          {"eigenvalues", vec(r.result.eigenvalues)},
          {"antisymmetry", vec(r.result.antisymmetry)},
          {"residuals", vec(r.result.residuals)},
          {"matvecs", r.result.matvecs},
          {"selected_index", r.selected.index},
          {"selected_energy", r.selected.energy}};
}

int cmd_oracle(const Common& common, int grid_points, int coarse_points, int n_states) {
  RunConfig cfg = resolve(common);
  if (grid_points > 0) cfg.oracle.grid_points = grid_points;
  if (coarse_points >= 0) cfg.oracle.coarse_grid_points = coarse_points;
  if (n_states > 0) cfg.oracle.n_states = n_states;
  validate(cfg);

  const OracleRun fine = solve_grid(cfg, cfg.oracle.grid_points, cfg.oracle.n_states, common.seed);
  json j = {{"hamiltonian", to_string(cfg.system.hamiltonian.kind)},
            {"n_particles", cfg.system.hamiltonian.n_particles},
            {"half_length", cfg.system.half_length},
            {"fine", run_json(fine)}};
  double energy = fine.selected.energy;
  std::cout << std::setprecision(10) << "selected energy (" << fine.grid_points << " points): " << energy << '\n';
  const int coarse_n = cfg.oracle.coarse_grid_points;
  if (coarse_n > 0 && coarse_n != cfg.oracle.grid_points) {
    const OracleRun coarse = solve_grid(cfg, coarse_n, cfg.oracle.n_states, common.seed);
    energy = richardson(coarse.selected.energy, coarse.spacing, fine.selected.energy, fine.spacing);
    j["coarse"] = run_json(coarse);
    j["richardson"] = energy;
    std::cout << "extrapolated energy: " << energy << '\n';
  }
  j["energy"] = energy;

  const fs::path dir = cfg.output.directory;
  fs::create_directories(dir);
  write_file_atomic(dir / "oracle.json", j.dump(2) + "\n");
  const GridHamiltonian h =
      GridHamiltonian(cfg.system.hamiltonian, cfg.system.half_length, cfg.oracle.grid_points);
  write_eigenvector_csv(dir / "eigenvector.csv", h, fine.result.eigenvectors.col(fine.selected.index));
  return kExitOk;
}

int cmd_evaluate_grid(const Common& common, const std::string& checkpoint, int resolution) {
  const RunConfig cfg = resolve(common);
  const WaveflowModel model = model_from_checkpoint(cfg, checkpoint);
  if (model.n_particles() != 2) throw InvalidConfiguration("evaluate-grid needs a two-particle model");
  if (resolution < 2) throw InvalidConfiguration("resolution must be at least 2");
  const double L = cfg.system.half_length;
  std::vector<GridSample> grid;
  grid.reserve(static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution));
  for (int i = 0; i < resolution; ++i) {
    const double x0 = -L + 2.0 * L * i / (resolution - 1);
    for (int k = 0; k < resolution; ++k) {
      const double x1 = -L + 2.0 * L * k / (resolution - 1);
      const double x[2] = {x0, x1};
      grid.push_back({x0, x1, model.psi(x).value});
    }
  }
  const fs::path dir = cfg.output.directory;
  write_file_atomic(dir / "grid.csv", grid_csv(grid));
  write_file_atomic(dir / "grid.svg", grid_svg(grid, resolution));
  std::cout << "wrote " << (dir / "grid.csv").string() << " and " << (dir / "grid.svg").string() << '\n';
  return kExitOk;
}

int cmd_sample(const Common& common, const std::string& checkpoint, long n) {
  const RunConfig cfg = resolve(common);
  const WaveflowModel model = model_from_checkpoint(cfg, checkpoint);
  if (n < 1) throw InvalidConfiguration("--n must be positive");
  Rng rng = derive_rng(common.seed, 0x73616d70);
  std::ostringstream out;
  out << std::setprecision(17);
  for (int d = 0; d < model.n_particles(); ++d) out << (d ? "," : "") << 'x' << d;
  out << '\n';
  for (long s = 0; s < n; ++s) {
    const std::vector<double> x = model.sample(rng);
    for (std::size_t d = 0; d < x.size(); ++d) out << (d ? "," : "") << x[d];
    out << '\n';
  }
  const fs::path path = fs::path(cfg.output.directory) / "samples.csv";
  write_file_atomic(path, out.str());
  std::cout << "wrote " << n << " samples to " << path.string() << '\n';
  return kExitOk;
}

int cmd_check(const Common& common, int gradient_samples, const std::vector<std::string>& only) {
  CheckContext ctx;
  ctx.config = resolve(common);
  ctx.seed = common.seed_set ? common.seed : 1;
  if (gradient_samples > 0) ctx.gradient_samples = gradient_samples;
  ctx.only = only;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<CheckResult> results = run_property_suite(ctx);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << format_results(results);
  std::vector<std::string> failed;
  for (const CheckResult& r : results)
    if (!r.passed) failed.push_back(r.name);
  std::cout << std::fixed << std::setprecision(1) << "total " << secs << " s\n";
  if (failed.empty()) {
    std::cout << "all " << results.size() << " properties passed\n";
    return kExitOk;
  }
  std::cout << "FAILED:";
  for (const std::string& f : failed) std::cout << ' ' << f;
  std::cout << '\n';
  return kExitRuntime;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"waveflow: spline flows for fermionic ground states"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "configuration file (defaults if omitted)");
    sub->add_option_function<std::uint64_t>(
        "--seed",
        [&](std::uint64_t s) {
          common.seed = s;
          common.seed_set = true;
        },
        "random seed");
    sub->add_option("--workers", common.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", common.out_dir, "output directory");
  };

  int epochs = 0;
  auto* train = app.add_subcommand("train", "optimize the flow by variational Monte Carlo");
  add_common(train);
  train->add_option("--epochs", epochs, "override training.epochs");

  int grid_points = 0;
  int coarse_points = -1;
  int n_states = 0;
  auto* oracle = app.add_subcommand("oracle", "grid eigensolver reference energy");
  add_common(oracle);
  oracle->add_option("--grid-points", grid_points, "points per axis");
  oracle->add_option("--coarse-grid-points", coarse_points, "coarse grid for extrapolation (0 disables)");
  oracle->add_option("--states", n_states, "number of eigenpairs");

  std::string checkpoint;
  int resolution = 101;
  auto* grid = app.add_subcommand("evaluate-grid", "evaluate psi on a square grid");
  add_common(grid);
  grid->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  grid->add_option("--resolution", resolution, "points per axis");

  long n_samples = 1000;
  auto* sample = app.add_subcommand("sample", "draw exact samples from psi^2");
  add_common(sample);
  sample->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  sample->add_option("--n", n_samples, "number of samples");

  int gradient_samples = 0;
  auto* check = app.add_subcommand("check", "run the property suite");
  add_common(check);
  check->add_option("--gradient-samples", gradient_samples, "Monte Carlo samples for the gradient check");
  std::vector<std::string> only;
  check->add_option("--only", only, "run only the named properties");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  log::init();
  try {
    if (*train) return cmd_train(common, epochs);
    if (*oracle) return cmd_oracle(common, grid_points, coarse_points, n_states);
    if (*grid) return cmd_evaluate_grid(common, checkpoint, resolution);
    if (*sample) return cmd_sample(common, checkpoint, n_samples);
    if (*check) return cmd_check(common, gradient_samples, only);
  } catch (const ConfigError& e) {
    log::error(e.what());
    return kExitConfig;
  } catch (const InvalidConfiguration& e) {
    log::error(e.what());
    return kExitConfig;
  } catch (const CheckpointMismatch& e) {
    log::error(e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    log::error(e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace waveflow
