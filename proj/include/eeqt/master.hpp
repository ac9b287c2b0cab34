#pragma once

// Deterministic integration of the hybrid master equation for statistical
// states and of its dual for observables, with fixed-step RK4.
//
//   d/dt rho_a = -i[H_a, rho_a] + sum_b g_ab rho_b g_ab^+ - 1/2 {L_a, rho_a}
//   d/dt A_a   =  i[H_a, A_a]   + sum_b g_ba^+ A_b g_ba  - 1/2 {L_a, A_a}

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "eeqt/errors.hpp"
#include "eeqt/hilbert.hpp"
#include "eeqt/model.hpp"

namespace eeqt {

struct IntegratorConfig {
  double dt = 1e-3;
  double t_max = 0.0;
  std::size_t record_every = 1;
  // Abort thresholds checked at every recorded snapshot.
  double trace_tolerance = 1e-8;
  double min_eigenvalue = -1e-8;
};

struct TimedDensity {
  double t = 0.0;
  HybridDensity rho;
};

struct TimedObservable {
  double t = 0.0;
  Blocks observable;
};

/// Number of dt steps spanning [0, t_max]. t_max must be an integer multiple of
/// dt up to a relative 1e-9; t_max == 0 yields zero steps.
inline std::size_t step_count(double dt, double t_max) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("dt must be positive and finite");
  if (!(t_max >= 0.0) || !std::isfinite(t_max)) {
    throw InvalidInput("t_max must be nonnegative and finite");
  }
  if (t_max == 0.0) return 0;
  if (dt > t_max) throw InvalidInput("dt must not exceed t_max");
  const double ratio = t_max / dt;
  const double steps = std::round(ratio);
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
    throw InvalidInput("t_max (" + std::to_string(t_max) + ") is not a multiple of dt (" +
                       std::to_string(dt) + ")");
  }
  return static_cast<std::size_t>(steps);
}

inline double step_time(std::size_t step, double dt) { return static_cast<double>(step) * dt; }

/// Step indices at which a run with `record_every` stride records: 0, s, 2s,
/// ... and always the final step.
inline std::vector<std::size_t> recorded_steps(std::size_t n_steps, std::size_t record_every) {
  if (record_every == 0) throw InvalidInput("record_every must be positive");
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k <= n_steps; k += record_every) out.push_back(k);
  if (out.back() != n_steps) out.push_back(n_steps);
  return out;
}

namespace detail {

inline void require_blocks_shape(const HybridModel& model, const Blocks& blocks, const char* who) {
  if (blocks.size() != model.classical_size()) {
    throw InvalidInput(std::string(who) + ": expected " + std::to_string(model.classical_size()) +
                       " sectors, got " + std::to_string(blocks.size()));
  }
  const std::size_t n = model.quantum_dim();
  for (std::size_t a = 0; a < blocks.size(); ++a) {
    if (blocks[a].rows() != n || blocks[a].cols() != n) {
      throw InvalidInput(std::string(who) + ": sector " + std::to_string(a + 1) +
                         " has wrong dimension");
    }
  }
}

// y + h * k, blockwise.
inline Blocks axpy(const Blocks& y, double h, const Blocks& k) {
  Blocks out = y;
  for (std::size_t a = 0; a < out.size(); ++a) out[a].add_scaled(h, k[a]);
  return out;
}

template <class Rhs>
Blocks rk4_step(const Blocks& y, double h, const Rhs& rhs) {
  const Blocks k1 = rhs(y);
  const Blocks k2 = rhs(axpy(y, 0.5 * h, k1));
  const Blocks k3 = rhs(axpy(y, 0.5 * h, k2));
  const Blocks k4 = rhs(axpy(y, h, k3));
  Blocks out = y;
  for (std::size_t a = 0; a < out.size(); ++a) {
    out[a].add_scaled(h / 6.0, k1[a]);
    out[a].add_scaled(h / 3.0, k2[a]);
    out[a].add_scaled(h / 3.0, k3[a]);
    out[a].add_scaled(h / 6.0, k4[a]);
  }
  return out;
}

}  // namespace detail

inline Blocks liouville_rhs(const HybridModel& model, const HybridDensity& rho) {
  detail::require_blocks_shape(model, rho.components, "liouville_rhs");
  const std::size_t m = model.classical_size();
  const Complex minus_i{0.0, -1.0};
  Blocks out;
  out.reserve(m);
  for (std::size_t a = 0; a < m; ++a) {
    const auto& r = rho.components[a];
    const auto& h = model.hamiltonian(a);
    const auto& lam = model.lambda(a);
    ComplexMatrix d = commutator(h, r) * minus_i;
    d.add_scaled(-0.5, anticommutator(lam, r));
    for (std::size_t b = 0; b < m; ++b) {
      const auto& g = model.coupling(a, b);
      if (b == a || g.is_zero()) continue;
      d += g * rho.components[b] * adjoint(g);
    }
    out.push_back(std::move(d));
  }
  return out;
}

inline Blocks heisenberg_rhs(const HybridModel& model, const Blocks& observable) {
  detail::require_blocks_shape(model, observable, "heisenberg_rhs");
  const std::size_t m = model.classical_size();
  const Complex plus_i{0.0, 1.0};
  Blocks out;
  out.reserve(m);
  for (std::size_t a = 0; a < m; ++a) {
    const auto& obs = observable[a];
    ComplexMatrix d = commutator(model.hamiltonian(a), obs) * plus_i;
    d.add_scaled(-0.5, anticommutator(model.lambda(a), obs));
    for (std::size_t b = 0; b < m; ++b) {
      const auto& g = model.coupling(b, a);
      if (b == a || g.is_zero()) continue;
      d += adjoint(g) * observable[b] * g;
    }
    out.push_back(std::move(d));
  }
  return out;
}

/// Integrates the master equation from rho0 and records (t, rho) at the given
/// step indices (sorted, unique, each <= the step count of cfg). Each step is
/// followed by re-symmetrizing every sector; a recorded snapshot that breaks
/// the trace or positivity thresholds aborts the run with NumericalFailure.
inline std::vector<TimedDensity> integrate_master_at(const HybridModel& model,
                                                     const HybridDensity& rho0,
                                                     const IntegratorConfig& cfg,
                                                     std::span<const std::size_t> record) {
  detail::require_blocks_shape(model, rho0.components, "integrate_master");
  if (auto why = density_violation(rho0)) {
    throw InvalidInput("integrate_master: invalid initial state: " + *why);
  }
  const std::size_t n_steps = step_count(cfg.dt, cfg.t_max);
  for (std::size_t i = 0; i < record.size(); ++i) {
    if (record[i] > n_steps || (i > 0 && record[i] <= record[i - 1])) {
      throw InvalidInput("integrate_master: record steps must be increasing and within t_max");
    }
  }

  const DensityTolerance tol{kHermitianTolerance, cfg.min_eigenvalue, cfg.trace_tolerance};
  const auto rhs = [&](const Blocks& y) { return liouville_rhs(model, HybridDensity{y}); };

  std::vector<TimedDensity> out;
  out.reserve(record.size());
  Blocks y = rho0.components;
  std::size_t next = 0;
  if (next < record.size() && record[next] == 0) {
    out.push_back({0.0, rho0});
    ++next;
  }
  const std::size_t last = record.empty() ? 0 : record.back();
  for (std::size_t k = 1; k <= last; ++k) {
    y = detail::rk4_step(y, cfg.dt, rhs);
    for (auto& blk : y) blk = hermitian_part(blk);
    if (record[next] == k) {
      HybridDensity rho{y};
      if (auto why = density_violation(rho, tol)) {
        throw NumericalFailure("integrate_master: at t=" + std::to_string(step_time(k, cfg.dt)) +
                               ": " + *why);
      }
      out.push_back({step_time(k, cfg.dt), std::move(rho)});
      ++next;
    }
  }
  return out;
}

/// Records at step 0, every `record_every` steps and at t_max.
inline std::vector<TimedDensity> integrate_master(const HybridModel& model,
                                                  const HybridDensity& rho0,
                                                  const IntegratorConfig& cfg) {
  const auto record = recorded_steps(step_count(cfg.dt, cfg.t_max), cfg.record_every);
  return integrate_master_at(model, rho0, cfg, record);
}

/// Integrates the dual (Heisenberg) equation for a block-diagonal observable.
inline std::vector<TimedObservable> integrate_heisenberg(const HybridModel& model,
                                                         const Blocks& a0,
                                                         const IntegratorConfig& cfg) {
  detail::require_blocks_shape(model, a0, "integrate_heisenberg");
  const std::size_t n_steps = step_count(cfg.dt, cfg.t_max);
  const auto record = recorded_steps(n_steps, cfg.record_every);
  const auto rhs = [&](const Blocks& y) { return heisenberg_rhs(model, y); };

  std::vector<TimedObservable> out;
  out.reserve(record.size());
  out.push_back({0.0, a0});
  Blocks y = a0;
  std::size_t next = 1;
  for (std::size_t k = 1; k <= n_steps; ++k) {
    y = detail::rk4_step(y, cfg.dt, rhs);
    if (next < record.size() && record[next] == k) {
      for (std::size_t a = 0; a < y.size(); ++a) {
        if (!y[a].is_finite()) {
          throw NumericalFailure("integrate_heisenberg: at t=" +
                                 std::to_string(step_time(k, cfg.dt)) + ": sector " +
                                 std::to_string(a + 1) + " has non-finite entries");
        }
      }
      out.push_back({step_time(k, cfg.dt), y});
      ++next;
    }
  }
  return out;
}

}  // namespace eeqt
