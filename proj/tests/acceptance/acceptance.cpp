// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "eeqt/cli.hpp"
#include "eeqt/ensemble.hpp"
#include "eeqt/master.hpp"
#include "eeqt/model_file.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

namespace {

using namespace eeqt;
using testing::Rng;

const std::string kModels = EEQT_MODELS_DIR;
const std::string kCli = EEQT_CLI_PATH;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

Verdict conservation_sweep() {
  Rng rng(101);
  double worst_trace = 0.0;
  double worst_eig = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 3;
    const std::size_t m = 2 + (trial / 3) % 2;
    const auto model = testing::random_model(rng, n, m, 2.0, 1.0);
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 10.0;
    cfg.record_every = 10;
    cfg.trace_tolerance = 1e-8;
    cfg.min_eigenvalue = -1e-7;
    std::vector<TimedDensity> run;
    try {
      run = integrate_master(model, testing::random_hybrid_density(rng, n, m), cfg);
    } catch (const NumericalFailure& e) {
      return {false, std::string("model ") + std::to_string(trial) + ": " + e.what()};
    }
    for (const auto& snap : run) {
      worst_trace = std::max(worst_trace, std::abs(total_trace(snap.rho.components).real() - 1.0));
      for (const auto& blk : snap.rho.components) worst_eig = std::min(worst_eig, min_eigenvalue(blk));
    }
  }
  return {worst_trace <= 1e-8 && worst_eig >= -1e-7,
          "max |Tr-1| " + fmt("%.2e", worst_trace) + ", min eigenvalue " + fmt("%.2e", worst_eig)};
}

Verdict duality_check() {
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 3;
    const std::size_t m = 2 + (trial / 3) % 2;
    const auto model = testing::random_model(rng, n, m);
    const auto rho0 = testing::random_hybrid_density(rng, n, m);
    const auto a0 = testing::random_observable(rng, n, m);
    IntegratorConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 1.0;
    cfg.record_every = 1000;
    const auto rho_t = integrate_master(model, rho0, cfg).back().rho;
    const auto a_t = integrate_heisenberg(model, a0, cfg).back().observable;
    worst = std::max(worst, std::abs(expectation(a_t, rho0) - expectation(a0, rho_t)));
  }
  return {worst <= 1e-6, "max |<A(t)>_rho0 - <A>_rho(t)| " + fmt("%.2e", worst)};
}

Verdict generator_forms() {
  Rng rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 3;
    const std::size_t m = 2 + (trial / 3) % 2;
    const auto model = testing::random_model(rng, n, m);
    const auto rho = testing::random_hybrid_density(rng, n, m);
    const auto obs = testing::random_observable(rng, n, m);
    worst = std::max(worst, testing::max_block_distance(
                                liouville_rhs(model, rho),
                                testing::block_form_liouville(model, rho.components)));
    worst = std::max(worst, testing::max_block_distance(heisenberg_rhs(model, obs),
                                                        testing::block_form_heisenberg(model, obs)));
  }
  return {worst <= 1e-12, "max block difference " + fmt("%.2e", worst)};
}

EnsembleReport ensemble(const LoadedModel& loaded, std::size_t n_traj, double dt, double t_max,
                        std::uint64_t seed, std::vector<double> grid, std::size_t workers) {
  EnsembleConfig cfg;
  cfg.n_traj = n_traj;
  cfg.trajectory.dt = dt;
  cfg.trajectory.t_max = t_max;
  cfg.trajectory.seed = seed;
  cfg.grid = std::move(grid);
  cfg.workers = workers;
  return run_ensemble(loaded.model, loaded.initial, cfg);
}

Verdict pdp_convergence() {
  std::string detail;
  bool pass = true;
  for (const char* name : {"yes_no_counter", "three_detector"}) {
    const auto loaded = load_model(kModels + "/" + name + ".json");
    const double dt = 1e-3;
    const double t_max = 5.0;
    const auto grid = uniform_grid(dt, t_max, 51);
    const auto report = ensemble(loaded, 10000, dt, t_max, 404, grid, 4);
    IntegratorConfig icfg;
    icfg.dt = dt;
    icfg.t_max = t_max;
    const auto steps = snap_grid(grid, dt, t_max);
    const auto master = integrate_master_at(
        loaded.model, embed_pure(loaded.initial, loaded.model.classical_size()), icfg, steps);
    double td = 0.0;
    double tv = 0.0;
    for (const auto& row : compare_to_master(report, master)) {
      td = std::max(td, row.trace_distance);
      tv = std::max(tv, row.tv_distance);
    }
    pass = pass && td <= 0.05 && tv <= 0.05;
    if (!detail.empty()) detail += "; ";
    detail += std::string(name) + ": trace " + fmt("%.4f", td) + ", TV " + fmt("%.4f", tv);
  }
  return {pass, detail};
}

LoadedModel decay_demo(const StateVector& psi) {
  ModelFile f;
  f.quantum_dim = 2;
  f.classical_labels = {"1", "2"};
  f.hamiltonians = {ComplexMatrix(2, 2), ComplexMatrix(2, 2)};
  f.couplings = {{2, 1, ComplexMatrix::diagonal({0.0, 1.0})}};
  f.initial_amplitudes.assign(psi.amplitudes().begin(), psi.amplitudes().end());
  f.initial_alpha = 1;
  return build_model(f);
}

Verdict detection_probability() {
  const double kappa = 1.0;
  const double b2 = 0.3;
  const double t_max = 20.0;
  const std::size_t n_traj = 100000;
  const auto loaded = decay_demo(StateVector{std::sqrt(1.0 - b2), std::sqrt(b2)});
  const auto report = ensemble(loaded, n_traj, 1e-3, t_max, 505, {t_max}, 4);
  std::size_t detected = 0;
  for (const auto& tr : report.trajectories) detected += tr.events.empty() ? 0 : 1;
  const double frac = static_cast<double>(detected) / static_cast<double>(n_traj);
  // Survival of the normalized flow: |a|^2 + |b|^2 exp(-kappa t).
  const double expected = 1.0 - ((1.0 - b2) + b2 * std::exp(-kappa * t_max));
  const double band = 3.0 * std::sqrt(expected * (1.0 - expected) / static_cast<double>(n_traj));
  return {std::abs(frac - expected) <= band,
          "fraction " + fmt("%.5f", frac) + ", expected " + fmt("%.5f", expected) + " +- " +
              fmt("%.5f", band)};
}

Verdict exponential_law() {
  const double kappa = 1.0;
  const double t_max = 20.0;
  const std::size_t n_traj = 100000;
  const auto loaded = decay_demo(StateVector{0.0, 1.0});
  const auto report = ensemble(loaded, n_traj, 1e-3, t_max, 606, {t_max}, 4);
  std::vector<double> times = report.events.first_event_times[report.events.channel(0, 1)];
  double sum = 0.0;
  for (double t : times) sum += t;
  const std::size_t censored = n_traj - times.size();
  times.resize(n_traj, std::numeric_limits<double>::infinity());
  const double ks = testing::ks_exponential(times, kappa);
  const double ks_critical = 1.628 / std::sqrt(static_cast<double>(n_traj));
  const double mean = sum / static_cast<double>(n_traj - censored);
  const double mean_band = 3.0 / (kappa * std::sqrt(static_cast<double>(n_traj)));
  return {ks <= ks_critical && std::abs(mean - 1.0 / kappa) <= mean_band,
          "KS " + fmt("%.5f", ks) + " (1% critical " + fmt("%.5f", ks_critical) + "), mean " +
              fmt("%.5f", mean) + " +- " + fmt("%.5f", mean_band)};
}

int run_cli(const std::string& args) {
  const int status = std::system((kCli + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict reproducibility() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("eeqt_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string base = "simulate --model " + kModels +
                           "/three_detector.json --dt 0.001 --t-max 5 --n-traj 2000 --seed 777";
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"a.csv", " --workers 1"}, {"b.csv", " --workers 1"}, {"c.csv", " --workers 8"}};
  std::vector<std::string> contents;
  for (const auto& [file, flags] : runs) {
    const std::string out = (dir / file).string();
    if (run_cli(base + flags + " --out " + out) != 0) {
      fs::remove_all(dir);
      return {false, "simulate" + flags + " failed"};
    }
    contents.push_back(read_text_file(out));
  }
  fs::remove_all(dir);
  const bool same_runs = contents[0] == contents[1];
  const bool same_workers = contents[0] == contents[2];
  return {same_runs && same_workers && !contents[0].empty(),
          std::string("repeat ") + (same_runs ? "identical" : "DIFFERENT") + ", workers 1 vs 8 " +
              (same_workers ? "identical" : "DIFFERENT") + " (" +
              std::to_string(contents[0].size()) + " bytes)"};
}

Verdict dt_bias_and_rk4_order() {
  std::string detail;
  bool pass = true;
  for (const char* name : {"yes_no_counter", "three_detector"}) {
    const auto loaded = load_model(kModels + "/" + name + ".json");
    const double t_max = 5.0;
    const std::size_t n_traj = 10000;
    const auto coarse = ensemble(loaded, n_traj, 2e-3, t_max, 808, {t_max}, 4);
    const auto fine = ensemble(loaded, n_traj, 1e-3, t_max, 808, {t_max}, 4);
    const auto pc = classical_probabilities(coarse.averaged.back().rho);
    const auto pf = classical_probabilities(fine.averaged.back().rho);
    double shift = 0.0;
    for (std::size_t a = 0; a < pc.size(); ++a) shift = std::max(shift, std::abs(pc[a] - pf[a]));
    const double band = 3.0 / std::sqrt(static_cast<double>(n_traj));

    const auto rho0 = embed_pure(loaded.initial, loaded.model.classical_size());
    auto final_state = [&](double dt) {
      IntegratorConfig cfg;
      cfg.dt = dt;
      cfg.t_max = t_max;
      cfg.record_every = std::numeric_limits<std::size_t>::max();
      return integrate_master(loaded.model, rho0, cfg).back().rho.components;
    };
    const auto reference = final_state(0.02 / 16.0);
    const double e1 = testing::max_block_distance(final_state(0.02), reference);
    const double e2 = testing::max_block_distance(final_state(0.01), reference);
    const double ratio = e1 / e2;
    pass = pass && shift < band && ratio >= 8.0 && ratio <= 32.0;
    if (!detail.empty()) detail += "; ";
    detail += std::string(name) + ": max |dp| " + fmt("%.4f", shift) + " (band " + fmt("%.4f", band) +
              "), RK4 ratio " + fmt("%.2f", ratio);
  }
  return {pass, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"master-equation conservation sweep", conservation_sweep},
      {"state/observable duality", duality_check},
      {"generator-form equivalence", generator_forms},
      {"ensemble-to-master convergence", pdp_convergence},
      {"detection-probability law", detection_probability},
      {"exponential event law", exponential_law},
      {"reproducibility", reproducibility},
      {"dt-bias and RK4 order", dt_bias_and_rk4_order},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %zu: %s  %s: %s [%.1fs]\n", k + 1, v.pass ? "PASS" : "FAIL",
                criteria[k].first, v.detail.c_str(), secs);
    std::fflush(stdout);
    if (!v.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
