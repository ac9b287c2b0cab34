#pragma once

// Single experimental runs of the hybrid system as a piecewise deterministic
// process on pure states (psi, alpha). Every step of length dt is one
// Bernoulli trial: with probability lambda(psi, alpha) * dt the classical
// state jumps alpha -> beta (beta drawn with weight ||g_{beta,alpha} psi||^2)
// and psi collapses to g_{beta,alpha} psi; otherwise psi follows the
// normalized non-unitary flow exp(-i H_alpha dt - Lambda_alpha dt / 2).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eeqt/errors.hpp"
#include "eeqt/hilbert.hpp"
#include "eeqt/master.hpp"
#include "eeqt/model.hpp"
#include "eeqt/rng.hpp"

namespace eeqt {

struct TrajectoryConfig {
  double dt = 1e-3;
  double t_max = 0.0;
  std::uint64_t seed = 0;
  std::size_t snapshot_every = 0;  // 0: events only
};

struct Trajectory {
  std::uint64_t traj_id = 0;
  PureHybridState initial;
  std::vector<EventRecord> events;
  std::vector<PureHybridState> snapshots;
  PureHybridState final_state;
};

inline constexpr double kRateStepWarn = 0.1;
inline constexpr double kRateStepReject = 1.0;

struct TrajectoryConfigCheck {
  std::size_t n_steps = 0;
  double max_rate_step = 0.0;  // max_alpha ||Lambda_alpha|| * dt
  std::optional<std::string> warning;
};

/// Validates dt and t_max against the model: the Bernoulli step needs
/// ||Lambda_alpha|| dt <= 1 in every sector (warning above 0.1).
inline TrajectoryConfigCheck check_trajectory_config(const HybridModel& model,
                                                     const TrajectoryConfig& cfg) {
  TrajectoryConfigCheck out;
  out.n_steps = step_count(cfg.dt, cfg.t_max);
  for (const auto& lam : model.lambdas()) {
    out.max_rate_step = std::max(out.max_rate_step, max_eigenvalue(lam) * cfg.dt);
  }
  if (out.max_rate_step > kRateStepReject) {
    throw InvalidInput("dt too large: max ||Lambda|| * dt = " + std::to_string(out.max_rate_step) +
                       " exceeds 1");
  }
  if (out.max_rate_step > kRateStepWarn) {
    out.warning = "max ||Lambda|| * dt = " + std::to_string(out.max_rate_step) +
                  " exceeds 0.1; jump statistics carry O(dt) bias";
  }
  return out;
}

/// lambda(psi, alpha) = <psi, Lambda_alpha psi>.
inline double jump_rate(const HybridModel& model, const StateVector& psi, std::size_t alpha) {
  const auto& lam = model.lambda(alpha);
  if (psi.dim() != lam.cols()) throw InvalidInput("jump_rate: dimension mismatch");
  return std::max(0.0, inner(psi, apply(lam, psi)).real());
}

struct JumpChannel {
  std::size_t to_alpha = 0;
  double probability = 0.0;
};

/// p_{alpha -> beta} = ||g_{beta,alpha} psi||^2 / lambda(psi, alpha) for every
/// beta != alpha, ascending in beta.
inline std::vector<JumpChannel> jump_distribution(const HybridModel& model, const StateVector& psi,
                                                  std::size_t alpha) {
  const double rate = jump_rate(model, psi, alpha);
  if (!(rate > 0.0)) {
    throw InvalidInput("jump_distribution: jump rate is zero in sector " +
                       std::to_string(alpha + 1));
  }
  std::vector<JumpChannel> out;
  for (std::size_t beta = 0; beta < model.classical_size(); ++beta) {
    if (beta == alpha) continue;
    out.push_back({beta, apply(model.coupling(beta, alpha), psi).norm_squared() / rate});
  }
  return out;
}

inline StateVector post_jump_state(const HybridModel& model, const StateVector& psi,
                                   std::size_t alpha, std::size_t beta) {
  if (beta == alpha) throw InvalidInput("post_jump_state: an event needs alpha != beta");
  StateVector image = apply(model.coupling(beta, alpha), psi);
  const double nrm = image.norm();
  if (!(nrm > 0.0)) {
    throw InvalidInput("post_jump_state: channel " + std::to_string(alpha + 1) + "->" +
                       std::to_string(beta + 1) + " annihilates psi");
  }
  image *= 1.0 / nrm;
  return image;
}

/// exp(-i H_alpha dt - Lambda_alpha dt / 2)
inline ComplexMatrix sector_propagator(const HybridModel& model, std::size_t alpha, double dt) {
  ComplexMatrix gen = model.hamiltonian(alpha) * Complex(0.0, -dt);
  gen.add_scaled(-0.5 * dt, model.lambda(alpha));
  return mat_exp(gen);
}

/// One K_alpha(dt) per classical sector, built once per (model, dt).
class PropagatorTable {
 public:
  PropagatorTable(const HybridModel& model, double dt) : dt_(dt) {
    for (std::size_t a = 0; a < model.classical_size(); ++a) {
      table_.push_back(sector_propagator(model, a, dt));
    }
  }

  double dt() const noexcept { return dt_; }
  const ComplexMatrix& operator[](std::size_t alpha) const { return table_.at(alpha); }
  std::size_t size() const noexcept { return table_.size(); }

 private:
  double dt_;
  Blocks table_;
};

inline constexpr double kMaxPreNormalizationNorm = 1.0 + 1e-9;

inline StateVector deterministic_step(const PropagatorTable& props, const StateVector& psi,
                                      std::size_t alpha) {
  StateVector next = apply(props[alpha], psi);
  const double nrm = next.norm();
  if (!(nrm > 0.0) || nrm > kMaxPreNormalizationNorm) {
    throw NumericalFailure("deterministic_step: pre-normalization norm " + std::to_string(nrm) +
                           " outside (0, 1 + 1e-9]");
  }
  next *= 1.0 / nrm;
  return next;
}

inline StateVector deterministic_step(const HybridModel& model, const StateVector& psi,
                                      std::size_t alpha, double dt) {
  StateVector next = apply(sector_propagator(model, alpha, dt), psi);
  const double nrm = next.norm();
  if (!(nrm > 0.0) || nrm > kMaxPreNormalizationNorm) {
    throw NumericalFailure("deterministic_step: pre-normalization norm " + std::to_string(nrm) +
                           " outside (0, 1 + 1e-9]");
  }
  next *= 1.0 / nrm;
  return next;
}

namespace detail {

inline ComplexMatrix matrix_power(ComplexMatrix base, std::size_t exponent) {
  ComplexMatrix result = ComplexMatrix::identity(base.rows());
  while (exponent > 0) {
    if (exponent & 1U) result = result * base;
    exponent >>= 1U;
    if (exponent > 0) base = base * base;
  }
  return result;
}

/// Flattened per-sector data for the step loop.
class PdpKernel {
 public:
  PdpKernel(const HybridModel& model, const PropagatorTable& props)
      : n_(model.quantum_dim()), m_(model.classical_size()), props_(&props) {
    for (std::size_t a = 0; a < m_; ++a) {
      Sector s;
      const auto lam = model.lambda(a).entries();
      s.lambda.assign(lam.begin(), lam.end());
      const auto k = props[a].entries();
      s.propagator.assign(k.begin(), k.end());
      s.absorbing = model.lambda(a).is_zero();
      for (std::size_t b = 0; b < m_; ++b) {
        if (b == a) continue;
        const auto& g = model.coupling(b, a);
        if (g.is_zero()) continue;
        s.channels.push_back({b, std::vector<Complex>(g.entries().begin(), g.entries().end())});
      }
      sectors_.push_back(std::move(s));
    }
  }

  struct Channel {
    std::size_t to;
    std::vector<Complex> g;
  };
  struct Sector {
    std::vector<Complex> lambda;
    std::vector<Complex> propagator;
    std::vector<Channel> channels;
    bool absorbing = false;
  };

  std::size_t dim() const noexcept { return n_; }
  const Sector& sector(std::size_t a) const noexcept { return sectors_[a]; }
  const ComplexMatrix& propagator(std::size_t a) const { return (*props_)[a]; }

  double rate(std::span<const Complex> psi, std::size_t a) const noexcept {
    const auto& lam = sectors_[a].lambda;
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double re = 0.0;
      double im = 0.0;
      for (std::size_t j = 0; j < n_; ++j) mul_add(lam[i * n_ + j], psi[j], re, im);
      acc += psi[i].real() * re + psi[i].imag() * im;
    }
    return acc > 0.0 ? acc : 0.0;
  }

  // out = op * psi, returns ||out||^2
  double apply(std::span<const Complex> op, std::span<const Complex> psi,
               std::span<Complex> out) const noexcept {
    double nrm2 = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double re = 0.0;
      double im = 0.0;
      for (std::size_t j = 0; j < n_; ++j) mul_add(op[i * n_ + j], psi[j], re, im);
      out[i] = {re, im};
      nrm2 += re * re + im * im;
    }
    return nrm2;
  }

 private:
  // Real arithmetic: std::complex multiplication adds inf/NaN recovery.
  static void mul_add(Complex a, Complex b, double& re, double& im) noexcept {
    re += a.real() * b.real() - a.imag() * b.imag();
    im += a.real() * b.imag() + a.imag() * b.real();
  }

  std::size_t n_;
  std::size_t m_;
  const PropagatorTable* props_;
  std::vector<Sector> sectors_;
};

[[noreturn]] [[gnu::noinline, gnu::cold]] inline void throw_bad_norm(double nrm, double t) {
  throw NumericalFailure("trajectory: pre-normalization norm " + std::to_string(nrm) +
                         " outside (0, 1 + 1e-9] at t=" + std::to_string(t));
}

inline void normalize_checked(std::span<Complex> v, double nrm2, double t) {
  const double nrm = std::sqrt(nrm2);
  if (!(nrm > 0.0) || nrm > kMaxPreNormalizationNorm) [[unlikely]] throw_bad_norm(nrm, t);
  const double inv = 1.0 / nrm;
  for (auto& z : v) z = {z.real() * inv, z.imag() * inv};
}

}  // namespace detail

/// Runs one trajectory from `initial` over cfg.t_max in steps of props.dt().
/// `sample_steps` (sorted ascending, each <= n_steps) lists step indices at
/// which `on_sample(sample_index, psi, alpha)` observes the state after that
/// step's update; step 0 is the initial state. The jump step ends at
/// t_k = k dt, which is also the event timestamp.
template <class OnSample>
Trajectory run_trajectory(const HybridModel& model, const PropagatorTable& props,
                          const PureHybridState& initial, const TrajectoryConfig& cfg,
                          std::uint64_t traj_id, TrajectoryRng& rng,
                          std::span<const std::size_t> sample_steps, OnSample&& on_sample) {
  validate_initial_state(model, initial);
  if (props.dt() != cfg.dt || props.size() != model.classical_size()) {
    throw InvalidInput("run_trajectory: propagator table does not match dt or model");
  }
  const std::size_t n_steps = step_count(cfg.dt, cfg.t_max);
  const detail::PdpKernel kernel(model, props);
  const std::size_t n = kernel.dim();
  const double dt = cfg.dt;

  Trajectory traj;
  traj.traj_id = traj_id;
  traj.initial = initial;

  std::vector<Complex> psi(initial.psi.amplitudes().begin(), initial.psi.amplitudes().end());
  std::vector<Complex> scratch(n);
  std::size_t alpha = initial.alpha;

  std::size_t next_sample = 0;
  auto emit_samples = [&](std::size_t k) {
    while (next_sample < sample_steps.size() && sample_steps[next_sample] == k) {
      on_sample(next_sample, std::span<const Complex>(psi), alpha);
      ++next_sample;
    }
  };
  auto snapshot = [&](std::size_t k) {
    if (cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0) {
      traj.snapshots.push_back({StateVector(psi), alpha, step_time(k, dt)});
    }
  };
  auto next_stop = [&](std::size_t k) {
    std::size_t stop = n_steps;
    if (next_sample < sample_steps.size()) stop = std::min(stop, sample_steps[next_sample]);
    if (cfg.snapshot_every > 0) stop = std::min(stop, (k / cfg.snapshot_every + 1) * cfg.snapshot_every);
    return stop;
  };

  if (!sample_steps.empty() && sample_steps.back() > n_steps) {
    throw InvalidInput("run_trajectory: sample step beyond t_max");
  }
  emit_samples(0);
  snapshot(0);

  std::size_t k = 0;
  while (k < n_steps) {
    const auto& sec = kernel.sector(alpha);
    const std::size_t stop = next_stop(k);
    if (sec.absorbing) {
      // No outgoing channel: lambda == 0, no trial can succeed, and the flow is
      // K_alpha^r. Advance straight to the next observation point.
      const ComplexMatrix power = detail::matrix_power(kernel.propagator(alpha), stop - k);
      const double nrm2 = kernel.apply(power.entries(), psi, scratch);
      psi.swap(scratch);
      detail::normalize_checked(psi, nrm2, step_time(stop, dt));
      k = stop;
      emit_samples(k);
      snapshot(k);
      continue;
    }

    // Bernoulli trials up to the next observation point or the first jump.
    bool jumped = false;
    double lam = 0.0;
    while (k < stop) {
      ++k;
      lam = kernel.rate(psi, alpha);
      const double u = rng.uniform();
      if (u < lam * dt) {
        jumped = true;
        break;
      }
      const double nrm2 = kernel.apply(sec.propagator, psi, scratch);
      psi.swap(scratch);
      detail::normalize_checked(psi, nrm2, step_time(k, dt));
    }

    if (jumped) {
      const double v = rng.uniform();
      double cumulative = 0.0;
      const detail::PdpKernel::Channel* chosen = nullptr;
      double chosen_nrm2 = 0.0;
      std::vector<Complex> candidate(n);
      for (const auto& ch : sec.channels) {
        const double w = kernel.apply(ch.g, psi, candidate);
        if (w <= 0.0) continue;
        cumulative += w / lam;
        chosen = &ch;
        chosen_nrm2 = w;
        scratch.swap(candidate);
        if (v < cumulative) break;
      }
      if (chosen == nullptr) {
        throw NumericalFailure("trajectory: positive jump rate but every channel annihilates psi");
      }
      psi.swap(scratch);
      const double inv = 1.0 / std::sqrt(chosen_nrm2);
      for (auto& z : psi) z *= inv;
      traj.events.push_back({traj_id, step_time(k, dt), alpha, chosen->to});
      alpha = chosen->to;
    }
    emit_samples(k);
    snapshot(k);
  }

  traj.final_state = {StateVector(psi), alpha, step_time(n_steps, dt)};
  return traj;
}

/// Runs trajectory `traj_id` on its own stream derived from cfg.seed.
inline Trajectory run_trajectory(const HybridModel& model, const PureHybridState& initial,
                                 const TrajectoryConfig& cfg, std::uint64_t traj_id = 0) {
  check_trajectory_config(model, cfg);
  const PropagatorTable props(model, cfg.dt);
  TrajectoryRng rng = make_stream(cfg.seed, traj_id);
  return run_trajectory(model, props, initial, cfg, traj_id, rng, {},
                        [](std::size_t, std::span<const Complex>, std::size_t) {});
}

}  // namespace eeqt
