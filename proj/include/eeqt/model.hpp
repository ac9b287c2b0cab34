#pragma once

// The hybrid system T = Q x C: a quantum system of dimension n coupled to a
// classical system with m pure states. Operators on T that commute with the
// classical algebra are block diagonal, one n x n block per classical state,
// and are stored as `Blocks`. Couplings are full m x m grids of n x n blocks.
//
// Classical indices are 0-based in this API. Model files, event logs and
// diagnostics shown to users are 1-based.

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eeqt/errors.hpp"
#include "eeqt/hilbert.hpp"

namespace eeqt {

using Blocks = std::vector<ComplexMatrix>;

/// m x m grid of n x n operators; entry (row, col) is the block g_{row,col}.
class OperatorGrid {
 public:
  OperatorGrid() = default;
  OperatorGrid(std::size_t m, std::size_t n) : m_(m), n_(n), blocks_(m * m, ComplexMatrix(n, n)) {}

  std::size_t classical_size() const noexcept { return m_; }
  std::size_t quantum_dim() const noexcept { return n_; }

  ComplexMatrix& operator()(std::size_t row, std::size_t col) { return blocks_[row * m_ + col]; }
  const ComplexMatrix& operator()(std::size_t row, std::size_t col) const {
    return blocks_[row * m_ + col];
  }

  friend bool operator==(const OperatorGrid&, const OperatorGrid&) = default;

 private:
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::vector<ComplexMatrix> blocks_;
};

struct ClassicalSpace {
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t event_channel_count() const noexcept { return size() * size() - size(); }

  static ClassicalSpace numbered(std::size_t m) {
    ClassicalSpace c;
    for (std::size_t k = 1; k <= m; ++k) c.labels.push_back(std::to_string(k));
    return c;
  }
};

struct HybridDensity {
  Blocks components;

  std::size_t classical_size() const noexcept { return components.size(); }
  std::size_t quantum_dim() const noexcept {
    return components.empty() ? 0 : components.front().rows();
  }
};

struct PureHybridState {
  StateVector psi;
  std::size_t alpha = 0;
  double t = 0.0;

  friend bool operator==(const PureHybridState&, const PureHybridState&) = default;
};

/// A classical event alpha -> beta at time t in trajectory traj_id.
struct EventRecord {
  std::uint64_t traj_id = 0;
  double t = 0.0;
  std::size_t from_alpha = 0;
  std::size_t to_alpha = 0;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

/// E : (A_{ab}) -> diag(A_{aa}), the conditional expectation onto the
/// block-diagonal subalgebra.
inline Blocks diag_projection(const OperatorGrid& grid) {
  const std::size_t m = grid.classical_size();
  Blocks out;
  out.reserve(m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      const auto& blk = grid(a, b);
      if (!blk.is_square() || blk.rows() != grid.quantum_dim()) {
        throw InvalidInput("diag_projection: block (" + std::to_string(a + 1) + "," +
                           std::to_string(b + 1) + ") has ragged dimensions");
      }
    }
    out.push_back(grid(a, a));
  }
  return out;
}

/// Lambda_alpha = sum_beta g_{beta,alpha}^dagger g_{beta,alpha}.
inline Blocks compute_lambdas(const OperatorGrid& couplings) {
  const std::size_t m = couplings.classical_size();
  const std::size_t n = couplings.quantum_dim();
  Blocks lambdas(m, ComplexMatrix(n, n));
  for (std::size_t alpha = 0; alpha < m; ++alpha) {
    if (!couplings(alpha, alpha).is_zero()) {
      throw InvalidInput("couplings(" + std::to_string(alpha + 1) + "," +
                         std::to_string(alpha + 1) + "): diagonal coupling must vanish");
    }
    for (std::size_t beta = 0; beta < m; ++beta) {
      if (beta == alpha) continue;
      const auto& g = couplings(beta, alpha);
      lambdas[alpha] += adjoint(g) * g;
    }
    lambdas[alpha] = hermitian_part(lambdas[alpha]);
  }
  return lambdas;
}

/// Unvalidated model data as read from a file or assembled in code.
struct RawModel {
  std::size_t quantum_dim = 0;
  ClassicalSpace classical;
  Blocks hamiltonians;
  OperatorGrid couplings;
};

class HybridModel;
HybridModel validate_model(RawModel raw);

/// A validated experiment: Hamiltonians H_alpha, couplings g_{alpha,beta} and
/// the derived damping operators Lambda_alpha. Immutable once built.
class HybridModel {
 public:
  std::size_t quantum_dim() const noexcept { return n_; }
  std::size_t classical_size() const noexcept { return classical_.size(); }
  const ClassicalSpace& classical() const noexcept { return classical_; }
  std::size_t event_channel_count() const noexcept { return classical_.event_channel_count(); }

  const Blocks& hamiltonians() const noexcept { return hamiltonians_; }
  const ComplexMatrix& hamiltonian(std::size_t alpha) const { return hamiltonians_.at(alpha); }
  const OperatorGrid& couplings() const noexcept { return couplings_; }
  // g_{to, from}: drives the event from -> to.
  const ComplexMatrix& coupling(std::size_t to, std::size_t from) const {
    return couplings_(to, from);
  }
  const Blocks& lambdas() const noexcept { return lambdas_; }
  const ComplexMatrix& lambda(std::size_t alpha) const { return lambdas_.at(alpha); }

  // Channels (from, to) whose coupling block is not identically zero.
  std::vector<std::pair<std::size_t, std::size_t>> active_channels() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t from = 0; from < classical_size(); ++from)
      for (std::size_t to = 0; to < classical_size(); ++to)
        if (to != from && !couplings_(to, from).is_zero()) out.emplace_back(from, to);
    return out;
  }

 private:
  friend HybridModel validate_model(RawModel raw);
  HybridModel() = default;

  std::size_t n_ = 0;
  ClassicalSpace classical_;
  Blocks hamiltonians_;
  OperatorGrid couplings_;
  Blocks lambdas_;
};

inline HybridModel validate_model(RawModel raw) {
  const std::size_t n = raw.quantum_dim;
  const std::size_t m = raw.classical.size();
  if (n == 0) throw InvalidInput("quantum_dim must be positive");
  if (m == 0) throw InvalidInput("classical_labels: at least one classical state is required");
  if (raw.hamiltonians.size() != m) {
    throw InvalidInput("hamiltonians: expected " + std::to_string(m) + " matrices, got " +
                       std::to_string(raw.hamiltonians.size()));
  }
  for (std::size_t a = 0; a < m; ++a) {
    const auto& h = raw.hamiltonians[a];
    const std::string field = "hamiltonians[" + std::to_string(a + 1) + "]";
    if (h.rows() != n || h.cols() != n) {
      throw InvalidInput(field + " has shape " + std::to_string(h.rows()) + "x" +
                         std::to_string(h.cols()) + ", expected " + std::to_string(n) + "x" +
                         std::to_string(n));
    }
    if (!h.is_finite()) throw InvalidInput(field + " has non-finite entries");
    const double dev = hermiticity_deviation(h);
    if (dev > kHermitianTolerance) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.1e", dev);
      throw InvalidInput(field + " not Hermitian: deviation " + buf);
    }
  }
  if (raw.couplings.classical_size() != m || raw.couplings.quantum_dim() != n) {
    throw InvalidInput("couplings: grid must be " + std::to_string(m) + "x" + std::to_string(m) +
                       " blocks of " + std::to_string(n) + "x" + std::to_string(n));
  }
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      const auto& g = raw.couplings(a, b);
      const std::string field =
          "couplings(" + std::to_string(a + 1) + "," + std::to_string(b + 1) + ")";
      if (g.rows() != n || g.cols() != n) throw InvalidInput(field + " has wrong shape");
      if (!g.is_finite()) throw InvalidInput(field + " has non-finite entries");
    }
  }

  HybridModel model;
  model.lambdas_ = compute_lambdas(raw.couplings);
  for (std::size_t a = 0; a < m; ++a) {
    const double lo = min_eigenvalue(model.lambdas_[a]);
    if (lo < -kHermitianTolerance) {
      throw NumericalFailure("lambda[" + std::to_string(a + 1) +
                             "] not positive semidefinite: min eigenvalue " + std::to_string(lo));
    }
  }
  model.n_ = n;
  model.classical_ = std::move(raw.classical);
  model.hamiltonians_ = std::move(raw.hamiltonians);
  model.couplings_ = std::move(raw.couplings);
  return model;
}

inline Complex total_trace(const Blocks& blocks) {
  Complex acc{};
  for (const auto& b : blocks) acc += trace(b);
  return acc;
}

struct DensityTolerance {
  double hermitian = kHermitianTolerance;
  double min_eigenvalue = -kHermitianTolerance;
  double trace = 1e-8;
};

/// Describes the first violated HybridDensity invariant, if any.
inline std::optional<std::string> density_violation(const HybridDensity& rho,
                                                    const DensityTolerance& tol = {}) {
  if (rho.components.empty()) return "no classical sectors";
  const std::size_t n = rho.quantum_dim();
  for (std::size_t a = 0; a < rho.components.size(); ++a) {
    const auto& blk = rho.components[a];
    const std::string field = "rho[" + std::to_string(a + 1) + "]";
    if (blk.rows() != n || blk.cols() != n) return field + " has inconsistent shape";
    if (!blk.is_finite()) return field + " has non-finite entries";
    const double dev = hermiticity_deviation(blk);
    if (dev > tol.hermitian) return field + " not Hermitian: deviation " + std::to_string(dev);
    const double lo = min_eigenvalue(blk);
    if (lo < tol.min_eigenvalue) return field + " min eigenvalue " + std::to_string(lo);
  }
  const Complex tr = total_trace(rho.components);
  if (std::abs(tr - 1.0) > tol.trace) {
    return "total trace deviates from 1 by " + std::to_string(std::abs(tr - 1.0));
  }
  return std::nullopt;
}

inline HybridDensity make_hybrid_density(Blocks components) {
  HybridDensity rho{std::move(components)};
  if (auto why = density_violation(rho)) throw InvalidInput("invalid hybrid density: " + *why);
  return rho;
}

/// rho_hat = sum_alpha rho_alpha (partial trace over the classical system).
inline ComplexMatrix effective_quantum_state(const HybridDensity& rho) {
  if (rho.components.empty()) throw InvalidInput("effective_quantum_state: empty density");
  ComplexMatrix out(rho.quantum_dim(), rho.quantum_dim());
  for (const auto& blk : rho.components) out += blk;
  return out;
}

/// p_alpha = Tr(rho_alpha) (partial trace over the quantum system).
inline std::vector<double> classical_probabilities(const HybridDensity& rho) {
  std::vector<double> p;
  p.reserve(rho.components.size());
  for (const auto& blk : rho.components) p.push_back(trace(blk).real());
  return p;
}

/// <A>_rho = sum_alpha Tr(A_alpha rho_alpha).
inline Complex expectation(const Blocks& observable, const HybridDensity& rho) {
  if (observable.size() != rho.components.size()) {
    throw InvalidInput("expectation: observable has " + std::to_string(observable.size()) +
                       " sectors, state has " + std::to_string(rho.components.size()));
  }
  Complex acc{};
  for (std::size_t a = 0; a < observable.size(); ++a) {
    const auto& obs = observable[a];
    const auto& blk = rho.components[a];
    if (!obs.same_shape(blk) || !obs.is_square()) {
      throw InvalidInput("expectation: dimension mismatch in sector " + std::to_string(a + 1));
    }
    // Tr(A B) = sum_ij A_ij B_ji
    for (std::size_t i = 0; i < obs.rows(); ++i)
      for (std::size_t j = 0; j < obs.cols(); ++j) acc += obs(i, j) * blk(j, i);
  }
  return acc;
}

/// The hybrid density of a pure state (psi, alpha): |psi><psi| in sector alpha.
inline HybridDensity embed_pure(const PureHybridState& state, std::size_t m) {
  if (state.alpha >= m) throw InvalidInput("embed_pure: classical index out of range");
  if (!state.psi.is_normalized()) throw InvalidInput("embed_pure: psi is not normalized");
  const std::size_t n = state.psi.dim();
  HybridDensity rho{Blocks(m, ComplexMatrix(n, n))};
  rho.components[state.alpha] = projector(state.psi);
  return rho;
}

inline void validate_initial_state(const HybridModel& model, const PureHybridState& state) {
  if (state.psi.dim() != model.quantum_dim()) {
    throw InvalidInput("initial_state: amplitude count " + std::to_string(state.psi.dim()) +
                       " does not match quantum_dim " + std::to_string(model.quantum_dim()));
  }
  if (state.alpha >= model.classical_size()) {
    throw InvalidInput("initial_state: classical index " + std::to_string(state.alpha + 1) +
                       " out of range 1.." + std::to_string(model.classical_size()));
  }
  if (!state.psi.is_normalized()) {
    throw InvalidInput("initial_state: psi not normalized (norm " +
                       std::to_string(state.psi.norm()) + ")");
  }
}

}  // namespace eeqt
