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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "waveflow/check.hpp"
#include "waveflow/cli.hpp"
#include "waveflow/config.hpp"
#include "waveflow/oracle.hpp"
#include "waveflow/quadrature.hpp"

using namespace waveflow;
namespace fs = std::filesystem;

namespace {

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "waveflow");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "waveflow_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

const char* kTinyModel = R"(
[system]
hamiltonian = "free_box"
n_particles = 2
half_length = 5

[model]
order = 4
n_knots = 12
n_layers = 2
hidden_width = 4
coordinates = "first"

[training]
epochs = 3
batch_size = 8
learning_rate = 0.01
)";

}  // namespace

TEST_CASE("argument and configuration errors exit with 2") {
  CHECK(cli({"train", "--config", "/nonexistent/config.toml"}) == kExitConfig);
  CHECK(cli({"nonsense"}) == kExitConfig);
  CHECK(cli({}) == kExitConfig);
  const std::string bad = write("bad.toml", "[model]\norder = 2\n");
  CHECK(cli({"oracle", "--config", bad}) == kExitConfig);
}

TEST_CASE("oracle on the one-particle box") {
  const std::string cfg = write("box1.toml", "[system]\nhamiltonian = \"free_box\"\nn_particles = 1\n");
  const fs::path out = scratch() / "oracle1";
  REQUIRE(cli({"oracle", "--config", cfg, "--grid-points", "2001", "--coarse-grid-points", "0", "--states", "2",
               "--out", out.string()}) == kExitOk);
  const auto j = nlohmann::json::parse(slurp(out / "oracle.json"));
  CHECK(std::abs(j.at("energy").get<double>() / box_ground_energy(10.0) - 1.0) < 1e-3);
  CHECK(read_csv(out / "eigenvector.csv").size() == 2001);
}

TEST_CASE("oracle with a single state on helium fails at runtime") {
  const fs::path out = scratch() / "oracle_he";
  CHECK(cli({"oracle", "--grid-points", "41", "--coarse-grid-points", "0", "--states", "1", "--out", out.string()}) ==
        kExitRuntime);
}

TEST_CASE("train, evaluate-grid and sample") {
  const std::string cfg = write("tiny.toml", kTinyModel);
  const fs::path run = scratch() / "run";
  REQUIRE(cli({"train", "--config", cfg, "--seed", "3", "--out", run.string()}) == kExitOk);
  CHECK(fs::exists(run / "checkpoint.wvfl"));
  const auto summary = nlohmann::json::parse(slurp(run / "summary.json"));
  CHECK(summary.contains("energy_mean"));
  CHECK(summary.contains("energy_std"));
  std::ifstream log(run / "train.jsonl");
  int lines = 0;
  for (std::string l; std::getline(log, l);) ++lines;
  CHECK(lines == 3);
  CHECK(parse_config(slurp(run / "config.toml")).training.seed == 3);

  const std::string ckpt = (run / "checkpoint.wvfl").string();
  const fs::path grid = scratch() / "grid";
  REQUIRE(cli({"evaluate-grid", "--config", cfg, "--checkpoint", ckpt, "--resolution", "21", "--out", grid.string()}) ==
          kExitOk);
  const auto rows = read_csv(grid / "grid.csv");
  REQUIRE(rows.size() == 21 * 21);
  for (int i = 0; i < 21; ++i) {
    for (int k = 0; k < 21; ++k) {
      const auto& a = rows[static_cast<std::size_t>(i * 21 + k)];
      const auto& b = rows[static_cast<std::size_t>(k * 21 + i)];
      CHECK(std::abs(a[2] + b[2]) <= 1e-12);
      if (i == k) CHECK(a[2] == 0.0);
    }
  }
  CHECK(slurp(grid / "grid.svg").rfind("<svg", 0) == 0);

  const fs::path s1 = scratch() / "s1";
  const fs::path s2 = scratch() / "s2";
  REQUIRE(cli({"sample", "--config", cfg, "--checkpoint", ckpt, "--n", "500", "--seed", "4", "--out", s1.string()}) ==
          kExitOk);
  REQUIRE(cli({"sample", "--config", cfg, "--checkpoint", ckpt, "--n", "500", "--seed", "4", "--out", s2.string()}) ==
          kExitOk);
  CHECK(slurp(s1 / "samples.csv") == slurp(s2 / "samples.csv"));
  for (const auto& r : read_csv(s1 / "samples.csv")) CHECK(r[0] <= r[1]);

  const std::string wider = write("wider.toml", std::string(kTinyModel) + "\n[oracle]\nn_states = 4\n");
  std::string text = slurp(wider);
  text.replace(text.find("hidden_width = 4"), 16, "hidden_width = 5");
  const std::string mismatched = write("mismatched.toml", text);
  CHECK(cli({"sample", "--config", mismatched, "--checkpoint", ckpt, "--out", s1.string()}) == kExitConfig);
  CHECK(cli({"evaluate-grid", "--config", cfg, "--checkpoint", (scratch() / "missing.wvfl").string(), "--out",
             grid.string()}) == kExitConfig);
}

TEST_CASE("sampled marginals match quadrature marginals") {
  const std::string cfg_path = write("tiny_ks.toml", kTinyModel);
  const fs::path run = scratch() / "run_ks";
  REQUIRE(cli({"train", "--config", cfg_path, "--seed", "5", "--out", run.string()}) == kExitOk);
  const fs::path out = scratch() / "ks";
  REQUIRE(cli({"sample", "--config", cfg_path, "--checkpoint", (run / "checkpoint.wvfl").string(), "--n", "100000",
               "--seed", "6", "--out", out.string()}) == kExitOk);
  const auto rows = read_csv(out / "samples.csv");
  REQUIRE(rows.size() == 100000);

  const RunConfig cfg = load_config(cfg_path);
  WaveflowModel model = cfg.make_model();
  restore_checkpoint(load_checkpoint(run / "checkpoint.wvfl"), model.mutable_flow(), cfg.system.half_length);
  const double L = cfg.system.half_length;
  const GaussLegendre rule(8);
  auto density = [&](double a, double b) {
    const double x[2] = {a, b};
    const double v = model.psi(x).value;
    return 2.0 * v * v;
  };
  // Marginal CDFs of the smaller and the larger coordinate, tabulated at panel edges.
  const int panels = 200;
  std::vector<double> edges(panels + 1);
  std::vector<double> cdf0(panels + 1, 0.0);
  std::vector<double> cdf1(panels + 1, 0.0);
  for (int p = 0; p <= panels; ++p) edges[static_cast<std::size_t>(p)] = -L + 2 * L * p / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = edges[static_cast<std::size_t>(p)];
    const double hi = edges[static_cast<std::size_t>(p + 1)];
    const double m0 = integrate([&](double a) { return integrate([&](double b) { return density(a, b); }, a, L, 16, rule); },
                                lo, hi, 1, rule);
    const double m1 = integrate([&](double b) { return integrate([&](double a) { return density(a, b); }, -L, b, 16, rule); },
                                lo, hi, 1, rule);
    cdf0[static_cast<std::size_t>(p + 1)] = cdf0[static_cast<std::size_t>(p)] + m0;
    cdf1[static_cast<std::size_t>(p + 1)] = cdf1[static_cast<std::size_t>(p)] + m1;
  }
  CHECK(cdf0.back() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(cdf1.back() == doctest::Approx(1.0).epsilon(1e-6));
  for (int coord = 0; coord < 2; ++coord) {
    std::vector<double> v;
    for (const auto& r : rows) v.push_back(r[static_cast<std::size_t>(coord)]);
    std::sort(v.begin(), v.end());
    const std::vector<double>& cdf = coord == 0 ? cdf0 : cdf1;
    double d = 0.0;
    for (int p = 0; p <= panels; ++p) {
      const double t = edges[static_cast<std::size_t>(p)];
      const double emp = static_cast<double>(std::upper_bound(v.begin(), v.end(), t) - v.begin()) / v.size();
      d = std::max(d, std::abs(emp - cdf[static_cast<std::size_t>(p)]));
    }
    const double pvalue = ks_pvalue(d, v.size());
    MESSAGE("coordinate " << coord << ": D = " << d << ", p = " << pvalue);
    CHECK(pvalue > 0.01);
  }
}

TEST_CASE("property suite reports a corrupted orthogonalization") {
  CheckContext ctx;
  ctx.only = {"o_spline_orthonormality", "partition_of_unity"};
  ctx.tamper = [](SplineSpace& sp) {
    OrthoBasis broken = sp.ortho();
    broken.change_matrix(3, 4) += 1e-3;
    sp.override_ortho(broken);
  };
  const auto results = run_property_suite(ctx);
  REQUIRE(results.size() == 2);
  for (const auto& r : results) {
    if (r.name == "o_spline_orthonormality") CHECK_FALSE(r.passed);
    else CHECK(r.passed);
  }
  CHECK(format_results(results).find("FAIL") != std::string::npos);
  ctx.tamper = nullptr;
  for (const auto& r : run_property_suite(ctx)) CHECK(r.passed);
}

TEST_CASE("ks helpers") {
  std::vector<double> u(1000);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = (i + 0.5) / 1000.0;
  CHECK(ks_statistic(u, [](double x) { return x; }) == doctest::Approx(0.0005));
  CHECK(ks_pvalue(0.0005, 1000) == doctest::Approx(1.0));
  CHECK(ks_pvalue(0.1, 1000) < 1e-6);
  // Tabulated 5% critical value 1.358 / sqrt(n).
  CHECK(ks_pvalue(1.358 / std::sqrt(10000.0), 10000) == doctest::Approx(0.05).epsilon(0.02));
}
