// eeqt: hybrid quantum-classical event simulator.
//
//   eeqt validate --model M
//   eeqt master   --model M --dt F --t-max F [--grid-points N] --out PATH
//   eeqt simulate --model M --dt F --t-max F --n-traj N --seed U64 [--workers N]
//                 [--grid-points N] --out EVENTS.csv [--report PATH]
//   eeqt compare  --model M --dt F --t-max F --n-traj N --seed U64 [--workers N]
//                 [--grid-points N] --out PATH
//
// Exit status: 0 success, 1 usage or configuration error, 2 numerical failure
// (including a failed compare verdict).

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "eeqt/cli.hpp"

namespace {

void add_common(CLI::App& cmd, eeqt::cli::RunOptions& opt) {
  cmd.add_option("--model", opt.model_path, "Model file (JSON)")->required();
  cmd.add_option("--dt", opt.dt, "Time step")->capture_default_str();
  cmd.add_option("--t-max", opt.t_max, "Final time")->capture_default_str();
  cmd.add_option("--grid-points", opt.grid_points, "Sample times over [0, t-max]")
      ->capture_default_str();
  cmd.add_option("--out", opt.out, "Output file")->required();
}

void add_stochastic(CLI::App& cmd, eeqt::cli::RunOptions& opt,
                    std::optional<std::size_t>& workers) {
  cmd.add_option("--n-traj", opt.n_traj, "Number of trajectories")->capture_default_str();
  cmd.add_option("--seed", opt.seed, "Master seed")->capture_default_str();
  cmd.add_option("--workers", workers, "Worker threads (default: $EEQT_WORKERS or 1)");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace eeqt::cli;
  CLI::App app{"Hybrid quantum-classical event simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("eeqt ") + kToolVersion);

  RunOptions opt;
  std::optional<std::size_t> workers;

  auto* validate = app.add_subcommand("validate", "Load and check a model file");
  validate->add_option("--model", opt.model_path, "Model file (JSON)")->required();

  auto* master = app.add_subcommand("master", "Integrate the master equation");
  add_common(*master, opt);

  auto* simulate = app.add_subcommand("simulate", "Run an ensemble of event trajectories");
  add_common(*simulate, opt);
  add_stochastic(*simulate, opt, workers);
  simulate->add_option("--report", opt.report, "Report file (default: <out>.report)");

  auto* compare = app.add_subcommand("compare", "Compare ensemble averages with the master equation");
  add_common(*compare, opt);
  add_stochastic(*compare, opt, workers);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    opt.workers = resolve_workers(workers);
    if (*validate) return cmd_validate(opt, std::cout);
    if (*master) return cmd_master(opt, std::cout);
    if (*simulate) return cmd_simulate(opt, std::cout);
    if (*compare) return cmd_compare(opt, std::cout);
  } catch (const eeqt::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const eeqt::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
  return kUsageError;
}
