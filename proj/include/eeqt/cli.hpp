#pragma once

// Subcommands behind the `eeqt` executable. Every output file starts with a
// `#` metadata header carrying the tool version, the schema version, the full
// resolved configuration (including the canonical model) and the master seed.
// Worker count is a scheduling detail and never appears in outputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eeqt/ensemble.hpp"
#include "eeqt/errors.hpp"
#include "eeqt/master.hpp"
#include "eeqt/model.hpp"
#include "eeqt/model_file.hpp"

namespace eeqt::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kWorkersEnv = "EEQT_WORKERS";

enum ExitStatus : int { kSuccess = 0, kUsageError = 1, kNumericalFailure = 2 };

struct RunOptions {
  std::string model_path;
  double dt = 1e-3;
  double t_max = 1.0;
  std::size_t n_traj = 1000;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t grid_points = 51;
  std::string out;
  std::string report;  // simulate only; defaults to <out>.report
};

/// Worker count: explicit flag, else the environment variable, else 1.
inline std::size_t resolve_workers(std::optional<std::size_t> flag) {
  if (flag) {
    if (*flag == 0) throw InvalidInput("--workers must be positive");
    return *flag;
  }
  if (const char* env = std::getenv(kWorkersEnv); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || v == 0) {
      throw InvalidInput(std::string(kWorkersEnv) + " must be a positive integer, got \"" + env +
                         "\"");
    }
    return static_cast<std::size_t>(v);
  }
  return 1;
}

inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string format_time(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", t);
  return buf;
}

inline std::string metadata_header(const std::string& command, const RunOptions& opt,
                                   const LoadedModel& loaded, bool stochastic) {
  nlohmann::ordered_json cfg;
  cfg["command"] = command;
  cfg["model_path"] = opt.model_path;
  cfg["dt"] = opt.dt;
  cfg["t_max"] = opt.t_max;
  cfg["grid_points"] = opt.grid_points;
  if (stochastic) {
    cfg["n_traj"] = opt.n_traj;
    cfg["seed"] = opt.seed;
  }
  std::ostringstream os;
  os << "# tool: eeqt " << kToolVersion << "\n";
  os << "# schema_version: " << kSchemaVersion << "\n";
  os << "# config: " << cfg.dump() << "\n";
  os << "# model: " << nlohmann::ordered_json::parse(write_model_file(loaded.file)).dump() << "\n";
  if (stochastic) os << "# seed: " << opt.seed << "\n";
  return os.str();
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path);
  out << contents;
  if (!out) throw InvalidInput("failed writing " + path);
}

/// Whitespace-separated state table: t, p_1..p_m, total trace, then re/im of
/// every entry of every sector block.
inline std::string density_table(const std::vector<TimedDensity>& rows, std::size_t m,
                                 std::size_t n) {
  std::ostringstream os;
  os << "# columns: t";
  for (std::size_t a = 1; a <= m; ++a) os << " p_" << a;
  os << " trace";
  for (std::size_t a = 1; a <= m; ++a)
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 1; j <= n; ++j)
        os << " re_rho" << a << "_" << i << j << " im_rho" << a << "_" << i << j;
  os << "\n";
  for (const auto& row : rows) {
    os << format_time(row.t);
    for (double p : classical_probabilities(row.rho)) os << " " << format_number(p);
    os << " " << format_number(total_trace(row.rho.components).real());
    for (const auto& blk : row.rho.components)
      for (const auto& z : blk.entries())
        os << " " << format_number(z.real()) << " " << format_number(z.imag());
    os << "\n";
  }
  return os.str();
}

/// Event CSV: header row, then one line per event sorted by (traj_id, t).
/// Classical labels are 1-based.
inline std::string event_csv(const std::string& header, const std::vector<Trajectory>& trajs) {
  std::ostringstream os;
  os << header;
  os << "traj_id,t,from_alpha,to_alpha\n";
  for (const auto& tr : trajs)
    for (const auto& ev : tr.events)
      os << ev.traj_id << "," << format_time(ev.t) << "," << ev.from_alpha + 1 << ","
         << ev.to_alpha + 1 << "\n";
  return os.str();
}

inline std::string statistics_table(const EventStatistics& st) {
  std::ostringstream os;
  os << "# channel_counts (rows: from, columns: to)\n";
  for (std::size_t a = 0; a < st.m; ++a) {
    os << "#";
    for (std::size_t b = 0; b < st.m; ++b) os << " " << st.count(a, b);
    os << "\n";
  }
  os << "\n\n# histograms: " << st.n_bins << " uniform bins over [0, " << format_time(st.t_max)
     << "], bin width " << format_number(st.bin_width()) << "\n";
  os << "# columns: bin_start";
  std::vector<std::size_t> channels;
  for (std::size_t a = 0; a < st.m; ++a)
    for (std::size_t b = 0; b < st.m; ++b)
      if (a != b) channels.push_back(st.channel(a, b));
  for (auto ch : channels) os << " first_" << ch / st.m + 1 << "to" << ch % st.m + 1;
  for (auto ch : channels) os << " inter_" << ch / st.m + 1 << "to" << ch % st.m + 1;
  os << "\n";
  for (std::size_t k = 0; k < st.n_bins; ++k) {
    os << format_number(static_cast<double>(k) * st.bin_width());
    for (auto ch : channels) os << " " << st.first_event_histogram[ch][k];
    for (auto ch : channels) os << " " << st.inter_event_histogram[ch][k];
    os << "\n";
  }
  return os.str();
}

inline int cmd_validate(const RunOptions& opt, std::ostream& log) {
  const LoadedModel loaded = load_model(opt.model_path);
  log << "ok: " << opt.model_path << "\n"
      << "quantum_dim: " << loaded.model.quantum_dim() << "\n"
      << "classical_states: " << loaded.model.classical_size() << "\n"
      << "event_channels: " << loaded.model.event_channel_count() << "\n"
      << "active_channels: " << loaded.model.active_channels().size() << "\n";
  return kSuccess;
}

inline std::vector<TimedDensity> run_master_on_grid(const LoadedModel& loaded,
                                                    const RunOptions& opt) {
  const auto grid = uniform_grid(opt.dt, opt.t_max, opt.grid_points);
  const auto steps = snap_grid(grid, opt.dt, opt.t_max);
  IntegratorConfig cfg;
  cfg.dt = opt.dt;
  cfg.t_max = opt.t_max;
  return integrate_master_at(loaded.model, embed_pure(loaded.initial, loaded.model.classical_size()),
                             cfg, steps);
}

inline int cmd_master(const RunOptions& opt, std::ostream& log) {
  if (opt.out.empty()) throw InvalidInput("--out is required");
  const LoadedModel loaded = load_model(opt.model_path);
  const auto rows = run_master_on_grid(loaded, opt);
  write_file(opt.out, metadata_header("master", opt, loaded, false) +
                          density_table(rows, loaded.model.classical_size(),
                                        loaded.model.quantum_dim()));
  log << "wrote " << rows.size() << " snapshots to " << opt.out << "\n";
  return kSuccess;
}

inline EnsembleReport run_simulation(const LoadedModel& loaded, const RunOptions& opt,
                                     std::ostream& log) {
  EnsembleConfig cfg;
  cfg.n_traj = opt.n_traj;
  cfg.trajectory.dt = opt.dt;
  cfg.trajectory.t_max = opt.t_max;
  cfg.trajectory.seed = opt.seed;
  cfg.workers = opt.workers;
  cfg.grid = uniform_grid(opt.dt, opt.t_max, opt.grid_points);
  const auto check = check_trajectory_config(loaded.model, cfg.trajectory);
  if (check.warning) log << "warning: " << *check.warning << "\n";
  return run_ensemble(loaded.model, loaded.initial, cfg);
}

inline int cmd_simulate(const RunOptions& opt, std::ostream& log) {
  if (opt.out.empty()) throw InvalidInput("--out is required");
  const LoadedModel loaded = load_model(opt.model_path);
  const EnsembleReport report = run_simulation(loaded, opt, log);
  const std::string header = metadata_header("simulate", opt, loaded, true);
  write_file(opt.out, event_csv(header, report.trajectories));
  const std::string report_path = opt.report.empty() ? opt.out + ".report" : opt.report;
  write_file(report_path, header + "# averaged hybrid state over " + std::to_string(report.n_traj) +
                              " trajectories\n" +
                              density_table(report.averaged, loaded.model.classical_size(),
                                            loaded.model.quantum_dim()) +
                              "\n\n" + statistics_table(report.events));
  log << "events: " << report.events.total_events() << " in " << report.n_traj
      << " trajectories\nwrote " << opt.out << " and " << report_path << "\n";
  return kSuccess;
}

struct CompareVerdict {
  std::vector<ComparisonRow> rows;
  double max_trace_distance = 0.0;
  double max_tv_distance = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

inline CompareVerdict judge(std::vector<ComparisonRow> rows, std::size_t n_traj) {
  CompareVerdict v;
  v.threshold = 5.0 / std::sqrt(static_cast<double>(n_traj));
  for (const auto& r : rows) {
    v.max_trace_distance = std::max(v.max_trace_distance, r.trace_distance);
    v.max_tv_distance = std::max(v.max_tv_distance, r.tv_distance);
  }
  v.pass = v.max_trace_distance <= v.threshold && v.max_tv_distance <= v.threshold;
  v.rows = std::move(rows);
  return v;
}

inline std::string comparison_table(const CompareVerdict& v) {
  std::ostringstream os;
  os << "# columns: t trace_distance tv_distance\n";
  for (const auto& r : v.rows) {
    os << format_time(r.t) << " " << format_number(r.trace_distance) << " "
       << format_number(r.tv_distance) << "\n";
  }
  os << "# max_trace_distance: " << format_number(v.max_trace_distance) << "\n"
     << "# max_tv_distance: " << format_number(v.max_tv_distance) << "\n"
     << "# threshold: " << format_number(v.threshold) << "\n"
     << "# verdict: " << (v.pass ? "PASS" : "FAIL") << "\n";
  return os.str();
}

/// Runs both engines on one grid. Returns kNumericalFailure when the ensemble
/// misses the master solution by more than 5 / sqrt(n_traj).
inline int cmd_compare(const RunOptions& opt, std::ostream& log) {
  if (opt.out.empty()) throw InvalidInput("--out is required");
  const LoadedModel loaded = load_model(opt.model_path);
  const auto master = run_master_on_grid(loaded, opt);
  const EnsembleReport report = run_simulation(loaded, opt, log);
  const CompareVerdict v = judge(compare_to_master(report, master), opt.n_traj);
  write_file(opt.out, metadata_header("compare", opt, loaded, true) + comparison_table(v));
  log << "max trace distance " << format_number(v.max_trace_distance) << ", max TV distance "
      << format_number(v.max_tv_distance) << ", threshold " << format_number(v.threshold)
      << ": " << (v.pass ? "PASS" : "FAIL") << "\n";
  return v.pass ? kSuccess : kNumericalFailure;
}

}  // namespace eeqt::cli
