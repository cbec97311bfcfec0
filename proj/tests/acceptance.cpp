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

// Acceptance report: one PASS/FAIL/SKIP line per criterion, on stdout and in
// acceptance_report.txt. Exits 0 once the report is complete; with --strict any FAIL makes the
// exit status 1.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <deque>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>

#include <json.hpp>

#include "waveflow/check.hpp"
#include "waveflow/config.hpp"
#include "waveflow/oracle.hpp"
#include "waveflow/vqmc.hpp"

using namespace waveflow;

namespace {

// Pinned tolerances.
constexpr double kHeliumReference = -1.8125;
constexpr double kHeliumTolerance = 0.02;
constexpr double kHeliumSeconds = 300.0;
constexpr double kBoxRelative = 1e-3;
constexpr double kBoxRatioRelative = 0.01;
constexpr double kFreeBoxRelative = 0.05;
constexpr double kFreeBoxSeconds = 1800.0;
constexpr double kReproLow = -1.85;
constexpr double kReproHigh = -1.75;
constexpr double kSuiteSeconds = 120.0;

enum class Outcome { Pass, Fail, Skip };

int failures = 0;
std::ofstream report_file;

void emit(const std::string& text) {
  std::cout << text << std::flush;
  if (report_file) report_file << text << std::flush;
}

void report(Outcome o, const std::string& name, const std::string& detail) {
  const char* tag = o == Outcome::Pass ? "PASS" : o == Outcome::Fail ? "FAIL" : "SKIP";
  if (o == Outcome::Fail) ++failures;
  emit(std::string(tag) + "  " + name + "  " + detail + "\n");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double selected_energy(const HamiltonianSpec& spec, int points, double& spacing) {
  const GridHamiltonian h = build_hamiltonian(spec, 10.0, points);
  spacing = h.spacing();
  return select_antisymmetric(lowest_eigenpairs(h, 4)).energy;
}

void oracle_helium() {
  const auto t0 = std::chrono::steady_clock::now();
  const HamiltonianSpec helium;
  double h_fine = 0.0;
  double h_coarse = 0.0;
  const double fine = selected_energy(helium, 301, h_fine);
  const double coarse = selected_energy(helium, 201, h_coarse);
  const double e = richardson(coarse, h_coarse, fine, h_fine);
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << std::setprecision(7) << "E = " << e << " (301: " << fine << ", 201: " << coarse << "), |E - "
    << kHeliumReference << "| = " << std::abs(e - kHeliumReference) << " <= " << kHeliumTolerance << ", "
    << std::setprecision(3) << secs << " s <= " << kHeliumSeconds;
  report(std::abs(e - kHeliumReference) <= kHeliumTolerance && secs <= kHeliumSeconds ? Outcome::Pass : Outcome::Fail,
         "oracle_helium_reference", d.str());
}

void oracle_box_spectrum() {
  HamiltonianSpec box;
  box.kind = HamiltonianKind::FreeBox;
  box.n_particles = 1;
  const GridHamiltonian h = build_hamiltonian(box, 10.0, 2001);
  const EigenResult r = lowest_eigenpairs(h, 2);
  const double exact = box_ground_energy(10.0);
  const double rel = std::abs(r.eigenvalues[0] / exact - 1.0);
  const double ratio = r.eigenvalues[1] / r.eigenvalues[0];
  std::ostringstream d;
  d << std::setprecision(9) << "lambda1 = " << r.eigenvalues[0] << " vs " << exact << " (rel " << std::setprecision(3)
    << rel << " <= " << kBoxRelative << "), ratio = " << std::setprecision(6) << ratio << " (4 within "
    << kBoxRatioRelative * 100 << "%)";
  report(rel <= kBoxRelative && std::abs(ratio / 4.0 - 1.0) <= kBoxRatioRelative ? Outcome::Pass : Outcome::Fail,
         "oracle_box_spectrum", d.str());
}

void vqmc_free_box() {
  const auto t0 = std::chrono::steady_clock::now();
  FlowConfig f;
  f.n_dims = 2;
  f.order = 5;
  f.n_basis = 18;
  f.n_layers = 3;
  f.hidden_width = 16;
  f.seed = 0;
  WaveflowModel model(SquareFlow(f), BoxGeometry{5.0}, CoordinateChoice::Mean);
  HamiltonianSpec box;
  box.kind = HamiltonianKind::FreeBox;
  TrainConfig cfg;
  cfg.epochs = 15000;
  cfg.batch_size = 128;
  cfg.seed = 0;
  cfg.workers = 1;
  const double target = box_two_fermion_energy(5.0);
  int entered_at = -1;
  std::deque<double> last;
  TrainHooks hooks;
  hooks.log_line = [&](const std::string& line) {
    const auto j = nlohmann::json::parse(line);
    const int epoch = j.at("epoch").get<int>();
    last.push_back(j.at("energy").get<double>());
    if (static_cast<int>(last.size()) > cfg.baseline_window) last.pop_front();
    // The logged baseline averages the preceding epochs; only full windows count.
    if (entered_at < 0 && epoch >= cfg.baseline_window &&
        std::abs(j.at("baseline").get<double>() / target - 1.0) <= kFreeBoxRelative)
      entered_at = epoch;
  };
  train(model, box, cfg, hooks);
  const double secs = seconds_since(t0);
  const double final_mean = std::accumulate(last.begin(), last.end(), 0.0) / static_cast<double>(last.size());
  const double rel = std::abs(final_mean / target - 1.0);
  std::ostringstream d;
  d << std::setprecision(6) << "mean of the last " << last.size() << " epoch energies = " << final_mean << " vs "
    << target << " (rel " << std::setprecision(3) << rel << " <= " << kFreeBoxRelative << "); ";
  if (entered_at >= 0)
    d << "running mean first inside the band at epoch " << entered_at;
  else
    d << "running mean never inside the band";
  d << ", " << std::setprecision(4) << secs << " s <= " << kFreeBoxSeconds;
  report(rel <= kFreeBoxRelative && secs <= kFreeBoxSeconds ? Outcome::Pass : Outcome::Fail, "vqmc_free_box",
         d.str());
}

void full_reproduction() {
  const char* gate = std::getenv("WAVEFLOW_FULL_REPRO");
  if (gate == nullptr || std::strcmp(gate, "1") != 0) {
    report(Outcome::Skip, "vqmc_helium_full_run", "set WAVEFLOW_FULL_REPRO=1 to run 3 seeds x 60000 epochs");
    return;
  }
  int inside = 0;
  std::ostringstream d;
  d << std::setprecision(5);
  for (std::uint64_t seed : {0, 1, 2}) {
    RunConfig c;
    c.training.seed = seed;
    WaveflowModel model = c.make_model();
    const TrainSummary s = train(model, c.system.hamiltonian, c.training);
    const bool ok = s.energy_mean >= kReproLow && s.energy_mean <= kReproHigh;
    inside += ok ? 1 : 0;
    d << "seed " << seed << ": " << s.energy_mean << " +- " << s.energy_std << (ok ? " in" : " out") << "; ";
  }
  d << inside << "/3 in [" << kReproLow << ", " << kReproHigh << "], need 2";
  report(inside >= 2 ? Outcome::Pass : Outcome::Fail, "vqmc_helium_full_run", d.str());
}

void property_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<CheckResult> results = run_property_suite(CheckContext{});
  const double secs = seconds_since(t0);
  std::string failed;
  for (const CheckResult& r : results)
    if (!r.passed) failed += " " + r.name;
  emit(format_results(results));
  std::ostringstream d;
  d << std::setprecision(3) << results.size() << " properties, " << secs << " s <= " << kSuiteSeconds;
  if (!failed.empty()) d << ", failed:" << failed;
  report(failed.empty() && secs <= kSuiteSeconds ? Outcome::Pass : Outcome::Fail, "property_suite", d.str());
}

template <class F>
void guarded(const char* name, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(Outcome::Fail, name, std::string("error: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  report_file.open("acceptance_report.txt");
  guarded("oracle_helium_reference", oracle_helium);
  guarded("oracle_box_spectrum", oracle_box_spectrum);
  guarded("vqmc_free_box", vqmc_free_box);
  guarded("vqmc_helium_full_run", full_reproduction);
  guarded("property_suite", property_suite);
  emit((failures == 0 ? std::string("all criteria met") : std::to_string(failures) + " criteria failed") + "\n");
  return strict && failures > 0 ? 1 : 0;
}
