#pragma once

// Dense complex linear algebra for the small Hilbert spaces of hybrid
// quantum-classical models (n * m up to a few dozen). Row-major storage,
// no blocking, no expression templates.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eeqt/errors.hpp"

namespace eeqt {

using Complex = std::complex<double>;

inline constexpr double kHermitianTolerance = 1e-10;

class ComplexMatrix {
 public:
  ComplexMatrix() = default;

  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), entries_(rows * cols, Complex{}) {}

  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<Complex> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (entries_.size() != rows_ * cols_) {
      throw InvalidInput("ComplexMatrix: expected " + std::to_string(rows_ * cols_) +
                         " entries, got " + std::to_string(entries_.size()));
    }
  }

  ComplexMatrix(std::initializer_list<std::initializer_list<Complex>> rows)
      : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
    entries_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_) throw InvalidInput("ComplexMatrix: ragged initializer");
      entries_.insert(entries_.end(), row.begin(), row.end());
    }
  }

  static ComplexMatrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
    return out;
  }

  static ComplexMatrix diagonal(std::span<const Complex> diag) {
    ComplexMatrix out(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) out(i, i) = diag[i];
    return out;
  }

  static ComplexMatrix diagonal(std::initializer_list<Complex> diag) {
    return diagonal(std::span<const Complex>(diag.begin(), diag.size()));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return entries_.empty(); }

  Complex& operator()(std::size_t i, std::size_t j) noexcept { return entries_[i * cols_ + j]; }
  const Complex& operator()(std::size_t i, std::size_t j) const noexcept {
    return entries_[i * cols_ + j];
  }

  std::span<Complex> entries() noexcept { return entries_; }
  std::span<const Complex> entries() const noexcept { return entries_; }

  bool same_shape(const ComplexMatrix& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  ComplexMatrix& operator+=(const ComplexMatrix& o) {
    require_same_shape(o, "+=");
    for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] += o.entries_[k];
    return *this;
  }

  ComplexMatrix& operator-=(const ComplexMatrix& o) {
    require_same_shape(o, "-=");
    for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] -= o.entries_[k];
    return *this;
  }

  ComplexMatrix& operator*=(Complex s) noexcept {
    for (auto& e : entries_) e *= s;
    return *this;
  }

  // this += s * o
  ComplexMatrix& add_scaled(Complex s, const ComplexMatrix& o) {
    require_same_shape(o, "add_scaled");
    for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] += s * o.entries_[k];
    return *this;
  }

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
  friend ComplexMatrix operator*(ComplexMatrix a, Complex s) { return a *= s; }
  friend ComplexMatrix operator*(Complex s, ComplexMatrix a) { return a *= s; }

  friend bool operator==(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.entries_ == b.entries_;
  }

  double frobenius_norm() const noexcept {
    double acc = 0.0;
    for (const auto& e : entries_) acc += std::norm(e);
    return std::sqrt(acc);
  }

  // Induced 1-norm (max column sum).
  double one_norm() const noexcept {
    double best = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) {
      double col = 0.0;
      for (std::size_t i = 0; i < rows_; ++i) col += std::abs((*this)(i, j));
      best = std::max(best, col);
    }
    return best;
  }

  bool is_finite() const noexcept {
    return std::all_of(entries_.begin(), entries_.end(), [](const Complex& z) {
      return std::isfinite(z.real()) && std::isfinite(z.imag());
    });
  }

  bool is_zero() const noexcept {
    return std::all_of(entries_.begin(), entries_.end(),
                       [](const Complex& z) { return z == Complex{}; });
  }

 private:
  void require_same_shape(const ComplexMatrix& o, const char* op) const {
    if (!same_shape(o)) {
      throw InvalidInput(std::string("ComplexMatrix ") + op + ": shape mismatch " +
                         std::to_string(rows_) + "x" + std::to_string(cols_) + " vs " +
                         std::to_string(o.rows_) + "x" + std::to_string(o.cols_));
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Complex> entries_;
};

class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(std::size_t dim) : amplitudes_(dim, Complex{}) {}
  explicit StateVector(std::vector<Complex> amplitudes) : amplitudes_(std::move(amplitudes)) {}
  StateVector(std::initializer_list<Complex> amplitudes) : amplitudes_(amplitudes) {}

  static StateVector basis(std::size_t dim, std::size_t k) {
    StateVector v(dim);
    v[k] = 1.0;
    return v;
  }

  std::size_t dim() const noexcept { return amplitudes_.size(); }
  Complex& operator[](std::size_t k) noexcept { return amplitudes_[k]; }
  const Complex& operator[](std::size_t k) const noexcept { return amplitudes_[k]; }
  std::span<Complex> amplitudes() noexcept { return amplitudes_; }
  std::span<const Complex> amplitudes() const noexcept { return amplitudes_; }

  double norm_squared() const noexcept {
    double acc = 0.0;
    for (const auto& a : amplitudes_) acc += std::norm(a);
    return acc;
  }
  double norm() const noexcept { return std::sqrt(norm_squared()); }

  bool is_normalized(double tol = 1e-10) const noexcept { return std::abs(norm() - 1.0) <= tol; }

  StateVector& operator*=(Complex s) noexcept {
    for (auto& a : amplitudes_) a *= s;
    return *this;
  }

  StateVector normalized() const {
    const double nrm = norm();
    if (!(nrm > 0.0)) throw InvalidInput("StateVector: cannot normalize a zero vector");
    StateVector out = *this;
    out *= 1.0 / nrm;
    return out;
  }

  friend bool operator==(const StateVector&, const StateVector&) = default;

 private:
  std::vector<Complex> amplitudes_;
};

inline double distance(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw InvalidInput("distance: dimension mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.dim(); ++k) acc += std::norm(a[k] - b[k]);
  return std::sqrt(acc);
}

// <u, v>, antilinear in the first argument.
inline Complex inner(const StateVector& u, const StateVector& v) {
  if (u.dim() != v.dim()) throw InvalidInput("inner: dimension mismatch");
  Complex acc{};
  for (std::size_t k = 0; k < u.dim(); ++k) acc += std::conj(u[k]) * v[k];
  return acc;
}

inline ComplexMatrix mat_mul(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) {
    throw InvalidInput("mat_mul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                       std::to_string(b.rows()) + ")");
  }
  ComplexMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Complex aik = a(i, k);
      if (aik == Complex{}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

inline ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  return mat_mul(a, b);
}

inline StateVector apply(const ComplexMatrix& a, const StateVector& v) {
  if (a.cols() != v.dim()) throw InvalidInput("apply: dimension mismatch");
  StateVector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Complex acc{};
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * v[j];
    out[i] = acc;
  }
  return out;
}

inline ComplexMatrix adjoint(const ComplexMatrix& a) {
  ComplexMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = std::conj(a(i, j));
  return out;
}

inline Complex trace(const ComplexMatrix& a) {
  if (!a.is_square()) throw InvalidInput("trace: matrix is not square");
  Complex acc{};
  for (std::size_t i = 0; i < a.rows(); ++i) acc += a(i, i);
  return acc;
}

inline ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a * b - b * a;
}

inline ComplexMatrix anticommutator(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a * b + b * a;
}

// |psi><psi|
inline ComplexMatrix projector(const StateVector& psi) {
  ComplexMatrix out(psi.dim(), psi.dim());
  for (std::size_t i = 0; i < psi.dim(); ++i)
    for (std::size_t j = 0; j < psi.dim(); ++j) out(i, j) = psi[i] * std::conj(psi[j]);
  return out;
}

// Frobenius norm of a - a^dagger.
inline double hermiticity_deviation(const ComplexMatrix& a) {
  if (!a.is_square()) throw InvalidInput("hermiticity_deviation: matrix is not square");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) acc += std::norm(a(i, j) - std::conj(a(j, i)));
  return std::sqrt(acc);
}

inline bool is_hermitian(const ComplexMatrix& a, double tol = kHermitianTolerance) {
  return a.is_square() && hermiticity_deviation(a) <= tol;
}

// (a + a^dagger) / 2
inline ComplexMatrix hermitian_part(const ComplexMatrix& a) {
  ComplexMatrix out = a + adjoint(a);
  out *= 0.5;
  return out;
}

/// Matrix exponential by scaling and squaring around a degree-16 truncated
/// Taylor kernel. The argument is scaled until its 1-norm is at most 1/2, where
/// the truncation error (1/2)^17 / 17! is far below double precision.
inline ComplexMatrix mat_exp(const ComplexMatrix& a) {
  if (!a.is_square()) throw InvalidInput("mat_exp: matrix is not square");
  constexpr int kOrder = 16;
  constexpr double kScaledNorm = 0.5;
  const std::size_t n = a.rows();

  int squarings = 0;
  const double nrm = a.one_norm();
  if (nrm > kScaledNorm) squarings = static_cast<int>(std::ceil(std::log2(nrm / kScaledNorm)));
  ComplexMatrix scaled = a * Complex(std::ldexp(1.0, -squarings));

  const ComplexMatrix eye = ComplexMatrix::identity(n);
  ComplexMatrix result = eye;
  for (int k = kOrder; k >= 1; --k) {
    result = scaled * result;
    result *= Complex(1.0 / k);
    result += eye;
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return result;
}

struct HermitianEigen {
  std::vector<double> values;  // ascending
  ComplexMatrix vectors;       // columns are eigenvectors
};

/// Cyclic Jacobi eigensolver for Hermitian matrices. Each rotation first
/// removes the phase of the pivot entry, then applies a real Givens rotation.
/// Stops once the off-diagonal Frobenius norm is below 1e-12 (relative to the
/// matrix norm when that exceeds one) or after 100 sweeps.
inline HermitianEigen hermitian_eigen(const ComplexMatrix& input) {
  if (!input.is_square()) throw InvalidInput("hermitian_eigen: matrix is not square");
  const double dev = hermiticity_deviation(input);
  if (dev > kHermitianTolerance) {
    throw InvalidInput("hermitian_eigen: matrix not Hermitian (deviation " + std::to_string(dev) +
                       ")");
  }
  constexpr double kOffTolerance = 1e-12;
  constexpr int kMaxSweeps = 100;

  const std::size_t n = input.rows();
  ComplexMatrix a = hermitian_part(input);
  ComplexMatrix v = ComplexMatrix::identity(n);
  const double threshold = kOffTolerance * std::max(1.0, a.frobenius_norm());

  auto off_norm = [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) acc += std::norm(a(i, j));
    return std::sqrt(acc);
  };

  for (int sweep = 0; sweep < kMaxSweeps && off_norm() > threshold; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        const double r = std::abs(apq);
        if (r == 0.0) continue;
        const Complex phase = apq / r;  // e^{i phi}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double tau = (aqq - app) / (2.0 * r);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // U = diag(1, e^{-i phi}) * [[c, s], [-s, c]] on the (p, q) plane.
        const Complex u00 = c;
        const Complex u01 = s;
        const Complex u10 = -s * std::conj(phase);
        const Complex u11 = c * std::conj(phase);

        for (std::size_t k = 0; k < n; ++k) {  // a <- a U
          const Complex akp = a(k, p);
          const Complex akq = a(k, q);
          a(k, p) = akp * u00 + akq * u10;
          a(k, q) = akp * u01 + akq * u11;
        }
        for (std::size_t k = 0; k < n; ++k) {  // a <- U^dagger a
          const Complex apk = a(p, k);
          const Complex aqk = a(q, k);
          a(p, k) = std::conj(u00) * apk + std::conj(u10) * aqk;
          a(q, k) = std::conj(u01) * apk + std::conj(u11) * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {  // v <- v U
          const Complex vkp = v(k, p);
          const Complex vkq = v(k, q);
          v(k, p) = vkp * u00 + vkq * u10;
          v(k, q) = vkp * u01 + vkq * u11;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
    }
  }
  if (off_norm() > threshold) {
    throw NumericalFailure("hermitian_eigen: Jacobi iteration did not converge");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });

  HermitianEigen out{std::vector<double>(n), ComplexMatrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]).real();
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

inline double min_eigenvalue(const ComplexMatrix& a) {
  const auto eig = hermitian_eigen(a);
  return eig.values.empty() ? 0.0 : eig.values.front();
}

inline double max_eigenvalue(const ComplexMatrix& a) {
  const auto eig = hermitian_eigen(a);
  return eig.values.empty() ? 0.0 : eig.values.back();
}

/// Half the sum of absolute eigenvalues of a - b.
inline double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (!a.same_shape(b) || !a.is_square()) throw InvalidInput("trace_distance: dimension mismatch");
  const auto eig = hermitian_eigen(a - b);
  double acc = 0.0;
  for (double lambda : eig.values) acc += std::abs(lambda);
  return 0.5 * acc;
}

}  // namespace eeqt
