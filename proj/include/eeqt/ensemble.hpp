#pragma once

// Many independent trajectories, averaged back into hybrid statistical states.
//
// Trajectory i always draws from stream (seed, i). Trajectories are grouped in
// fixed chunks of kEnsembleChunk indices; each chunk sums its projectors in
// index order and chunks are reduced in chunk order, so the report is
// bit-identical for any worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "eeqt/errors.hpp"
#include "eeqt/hilbert.hpp"
#include "eeqt/master.hpp"
#include "eeqt/model.hpp"
#include "eeqt/pdp.hpp"
#include "eeqt/rng.hpp"

namespace eeqt {

inline constexpr std::size_t kEnsembleChunk = 64;
inline constexpr std::size_t kHistogramBins = 50;

struct EnsembleConfig {
  std::size_t n_traj = 1;
  TrajectoryConfig trajectory;
  std::vector<double> grid;  // sample times, ascending, multiples of dt
  std::size_t workers = 1;
};

struct EventStatistics {
  std::size_t m = 0;
  double t_max = 0.0;
  std::size_t n_bins = kHistogramBins;
  std::uint64_t n_trajectories = 0;
  // Row-major [from * m + to]. Diagonal entries stay zero.
  std::vector<std::uint64_t> channel_counts;
  // First event of each trajectory, bucketed by the channel it took. Sorted.
  std::vector<std::vector<double>> first_event_times;
  std::vector<std::vector<std::uint64_t>> first_event_histogram;
  // Waiting time before each non-first event, bucketed by that event's channel.
  std::vector<std::vector<std::uint64_t>> inter_event_histogram;

  std::size_t channel(std::size_t from, std::size_t to) const noexcept { return from * m + to; }
  std::uint64_t count(std::size_t from, std::size_t to) const { return channel_counts.at(channel(from, to)); }
  double bin_width() const noexcept { return t_max / static_cast<double>(n_bins); }
  std::uint64_t total_events() const noexcept {
    std::uint64_t acc = 0;
    for (auto c : channel_counts) acc += c;
    return acc;
  }
};

struct ComparisonRow {
  double t = 0.0;
  double trace_distance = 0.0;  // between effective quantum states
  double tv_distance = 0.0;     // between classical probability vectors
};

struct EnsembleReport {
  std::size_t n_traj = 0;
  std::vector<TimedDensity> averaged;
  EventStatistics events;
  std::vector<Trajectory> trajectories;  // events and end states; no snapshots
  std::optional<std::vector<ComparisonRow>> comparison;
};

/// Maps sample times to step indices. Each time must sit on the dt lattice
/// within 1e-12 (absolute, scaled by max(1, t)) and lie in [0, t_max].
inline std::vector<std::size_t> snap_grid(std::span<const double> grid, double dt, double t_max) {
  const std::size_t n_steps = step_count(dt, t_max);
  std::vector<std::size_t> steps;
  steps.reserve(grid.size());
  for (double t : grid) {
    const double k = std::round(t / dt);
    if (k < 0.0 || std::abs(t - k * dt) > 1e-12 * std::max(1.0, std::abs(t))) {
      throw InvalidInput("grid time " + std::to_string(t) + " is not a multiple of dt");
    }
    const auto step = static_cast<std::size_t>(k);
    if (step > n_steps) throw InvalidInput("grid time " + std::to_string(t) + " exceeds t_max");
    if (!steps.empty() && step <= steps.back()) {
      throw InvalidInput("grid times must be strictly increasing");
    }
    steps.push_back(step);
  }
  return steps;
}

/// `points` sample times spread evenly over [0, t_max] on the dt lattice.
inline std::vector<double> uniform_grid(double dt, double t_max, std::size_t points) {
  const std::size_t n_steps = step_count(dt, t_max);
  if (points == 0) throw InvalidInput("grid-points must be positive");
  std::vector<double> out;
  if (points == 1 || n_steps == 0) {
    out.push_back(step_time(n_steps, dt));
    if (n_steps != 0) out.insert(out.begin(), 0.0);
    return out;
  }
  std::size_t last = 0;
  out.push_back(0.0);
  for (std::size_t i = 1; i < points; ++i) {
    const auto step = static_cast<std::size_t>(
        std::llround(static_cast<double>(i) * static_cast<double>(n_steps) / static_cast<double>(points - 1)));
    if (step > last) {
      out.push_back(step_time(step, dt));
      last = step;
    }
  }
  return out;
}

inline EventStatistics event_statistics(std::span<const Trajectory> trajectories, std::size_t m,
                                        double t_max, std::size_t n_bins = kHistogramBins) {
  if (trajectories.empty()) throw InvalidInput("event_statistics: no trajectories");
  if (n_bins == 0) throw InvalidInput("event_statistics: n_bins must be positive");
  EventStatistics st;
  st.m = m;
  st.t_max = t_max;
  st.n_bins = n_bins;
  st.n_trajectories = trajectories.size();
  st.channel_counts.assign(m * m, 0);
  st.first_event_times.assign(m * m, {});
  st.first_event_histogram.assign(m * m, std::vector<std::uint64_t>(n_bins, 0));
  st.inter_event_histogram.assign(m * m, std::vector<std::uint64_t>(n_bins, 0));

  auto bin_of = [&](double t) {
    if (!(t_max > 0.0)) return std::size_t{0};
    const auto b = static_cast<std::size_t>(t / t_max * static_cast<double>(n_bins));
    return std::min(b, n_bins - 1);
  };

  for (const auto& traj : trajectories) {
    double previous = 0.0;
    for (std::size_t k = 0; k < traj.events.size(); ++k) {
      const auto& ev = traj.events[k];
      if (ev.from_alpha >= m || ev.to_alpha >= m || ev.from_alpha == ev.to_alpha) {
        throw InvalidInput("event_statistics: malformed event in trajectory " +
                           std::to_string(traj.traj_id));
      }
      const std::size_t ch = st.channel(ev.from_alpha, ev.to_alpha);
      ++st.channel_counts[ch];
      if (k == 0) {
        st.first_event_times[ch].push_back(ev.t);
        ++st.first_event_histogram[ch][bin_of(ev.t)];
      } else {
        ++st.inter_event_histogram[ch][bin_of(ev.t - previous)];
      }
      previous = ev.t;
    }
  }
  for (auto& times : st.first_event_times) std::sort(times.begin(), times.end());
  return st;
}

inline EnsembleReport run_ensemble(const HybridModel& model, const PureHybridState& initial,
                                   const EnsembleConfig& cfg) {
  if (cfg.n_traj == 0) throw InvalidInput("n_traj must be positive");
  if (cfg.workers == 0) throw InvalidInput("workers must be positive");
  validate_initial_state(model, initial);
  const auto& tcfg = cfg.trajectory;
  check_trajectory_config(model, tcfg);
  const std::vector<std::size_t> sample_steps = snap_grid(cfg.grid, tcfg.dt, tcfg.t_max);
  const PropagatorTable props(model, tcfg.dt);

  const std::size_t n = model.quantum_dim();
  const std::size_t m = model.classical_size();
  const std::size_t n_samples = sample_steps.size();
  const std::size_t block = n * n;
  const std::size_t chunk_stride = n_samples * m * block;
  const std::size_t n_chunks = (cfg.n_traj + kEnsembleChunk - 1) / kEnsembleChunk;

  TrajectoryConfig run_cfg = tcfg;
  run_cfg.snapshot_every = 0;

  std::vector<Trajectory> trajectories(cfg.n_traj);
  std::vector<Complex> chunk_sums(n_chunks * chunk_stride, Complex{});
  std::vector<std::exception_ptr> failures(n_chunks);
  std::atomic<std::size_t> next_chunk{0};

  auto work = [&] {
    for (;;) {
      const std::size_t c = next_chunk.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        Complex* acc = chunk_sums.data() + c * chunk_stride;
        const std::size_t begin = c * kEnsembleChunk;
        const std::size_t end = std::min(cfg.n_traj, begin + kEnsembleChunk);
        for (std::size_t i = begin; i < end; ++i) {
          TrajectoryRng rng = make_stream(tcfg.seed, i);
          trajectories[i] = run_trajectory(
              model, props, initial, run_cfg, i, rng, sample_steps,
              [&](std::size_t s, std::span<const Complex> psi, std::size_t alpha) {
                Complex* dst = acc + (s * m + alpha) * block;
                for (std::size_t r = 0; r < n; ++r)
                  for (std::size_t q = 0; q < n; ++q) dst[r * n + q] += psi[r] * std::conj(psi[q]);
              });
        }
      } catch (...) {
        failures[c] = std::current_exception();
      }
    }
  };

  const std::size_t n_workers = std::min(cfg.workers, n_chunks);
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  EnsembleReport report;
  report.n_traj = cfg.n_traj;
  const double inv_n = 1.0 / static_cast<double>(cfg.n_traj);
  for (std::size_t s = 0; s < n_samples; ++s) {
    HybridDensity rho{Blocks(m, ComplexMatrix(n, n))};
    for (std::size_t c = 0; c < n_chunks; ++c) {
      const Complex* src = chunk_sums.data() + c * chunk_stride + s * m * block;
      for (std::size_t a = 0; a < m; ++a) {
        auto dst = rho.components[a].entries();
        for (std::size_t e = 0; e < block; ++e) dst[e] += src[a * block + e];
      }
    }
    for (auto& blk : rho.components) {
      blk *= inv_n;
      blk = hermitian_part(blk);
    }
    report.averaged.push_back({step_time(sample_steps[s], tcfg.dt), std::move(rho)});
  }
  report.events = event_statistics(trajectories, m, tcfg.t_max);
  report.trajectories = std::move(trajectories);
  return report;
}

/// Per grid time: trace distance between effective quantum states and total
/// variation distance between classical distributions.
inline std::vector<ComparisonRow> compare_to_master(std::span<const TimedDensity> averaged,
                                                    std::span<const TimedDensity> master_run) {
  if (averaged.size() != master_run.size()) {
    throw InvalidInput("compare_to_master: grids have " + std::to_string(averaged.size()) +
                       " and " + std::to_string(master_run.size()) + " points");
  }
  std::vector<ComparisonRow> rows;
  rows.reserve(averaged.size());
  for (std::size_t k = 0; k < averaged.size(); ++k) {
    const double ta = averaged[k].t;
    const double tb = master_run[k].t;
    if (std::abs(ta - tb) > 1e-12 * std::max(1.0, std::abs(ta))) {
      throw InvalidInput("compare_to_master: grid mismatch at point " + std::to_string(k) + " (" +
                         std::to_string(ta) + " vs " + std::to_string(tb) + ")");
    }
    const auto& ra = averaged[k].rho;
    const auto& rb = master_run[k].rho;
    if (ra.classical_size() != rb.classical_size() || ra.quantum_dim() != rb.quantum_dim()) {
      throw InvalidInput("compare_to_master: state shapes differ");
    }
    const auto pa = classical_probabilities(ra);
    const auto pb = classical_probabilities(rb);
    double tv = 0.0;
    for (std::size_t a = 0; a < pa.size(); ++a) tv += std::abs(pa[a] - pb[a]);
    rows.push_back({ta, trace_distance(effective_quantum_state(ra), effective_quantum_state(rb)),
                    0.5 * tv});
  }
  return rows;
}

inline std::vector<ComparisonRow> compare_to_master(const EnsembleReport& report,
                                                    std::span<const TimedDensity> master_run) {
  return compare_to_master(std::span<const TimedDensity>(report.averaged), master_run);
}

}  // namespace eeqt
