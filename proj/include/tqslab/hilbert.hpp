#pragma once

#include <mutex>
#include <utility>

#include "tqslab/core.hpp"

namespace tqslab {

// One-step cyclic shift: S |j> = |j+1 mod n>.
inline Matrix cyclic_shift(int n) {
  Matrix s = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) s((j + 1) % n, j) = 1.0;
  return s;
}

// Fourier basis on the cyclic grid, columns ordered by ascending signed mode
// k = ceil(-n/2) .. ceil(n/2)-1. Column k has entries e^{2 pi i j k / n}/sqrt(n)
// and is the shift eigenvector with S v_k = e^{-2 pi i k / n} v_k.
inline Matrix fourier_basis(int n) {
  Matrix f(n, n);
  const int lo = mode_range_low(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int c = 0; c < n; ++c) {
    const int k = lo + c;
    for (int j = 0; j < n; ++j)
      f(j, c) = std::polar(scale, 2.0 * kPi * static_cast<double>(j) * k / n);
  }
  return f;
}

// Frequencies hbar*omega_k with omega_k = 2 pi k / (n * spacing), ascending.
inline RealVector mode_frequencies(const GridSpec& grid, double hbar) {
  const int n = grid.n_points;
  RealVector w(n);
  const int lo = mode_range_low(n);
  for (int c = 0; c < n; ++c) w(c) = hbar * 2.0 * kPi * (lo + c) / (n * grid.spacing);
  return w;
}

// Finite-scale stand-in for the translation generator on the grid coordinate.
// H = F diag(hbar*omega_k) F^dag with the symmetric mode window, so that
// exp(-i*spacing*H/hbar) is exactly the one-step cyclic shift. The symmetric
// branch of the logarithm fixes the otherwise ambiguous generator.
inline Operator translation_generator(const GridSpec& grid, double hbar = 1.0,
                                      const Tolerances& tol = {}) {
  grid.validate();
  if (!(hbar > 0.0)) throw std::invalid_argument("translation_generator: hbar must be > 0");
  const Matrix f = fourier_basis(grid.n_points);
  const RealVector w = mode_frequencies(grid, hbar);
  Matrix h = f * w.cast<Complex>().asDiagonal() * f.adjoint();
  h = (0.5 * (h + h.adjoint().eval())).eval();
  return make_operator(std::move(h), kHermitian, tol);
}

// Coordinate operator of the grid: diag(origin + j*spacing).
inline Operator time_operator(const GridSpec& grid, const Tolerances& tol = {}) {
  grid.validate();
  RealVector d(grid.n_points);
  for (int j = 0; j < grid.n_points; ++j) d(j) = grid.point(j);
  return diagonal_operator(d, tol);
}

// Process-wide instrumentation fed by every state evolution. Records only
// order-independent aggregates (max, count), so concurrent recording cannot
// perturb reported values.
class EnergyAudit {
 public:
  static EnergyAudit& instance() {
    static EnergyAudit audit;
    return audit;
  }

  void record(double norm_deviation, double energy_drift) {
    std::lock_guard<std::mutex> lk(mu_);
    if (norm_deviation > max_norm_deviation_) max_norm_deviation_ = norm_deviation;
    if (energy_drift > max_energy_drift_) max_energy_drift_ = energy_drift;
    ++count_;
  }

  void reset() {
    std::lock_guard<std::mutex> lk(mu_);
    max_norm_deviation_ = 0.0;
    max_energy_drift_ = 0.0;
    count_ = 0;
  }

  double max_norm_deviation() const {
    std::lock_guard<std::mutex> lk(mu_);
    return max_norm_deviation_;
  }
  double max_energy_drift() const {
    std::lock_guard<std::mutex> lk(mu_);
    return max_energy_drift_;
  }
  long long evolution_count() const {
    std::lock_guard<std::mutex> lk(mu_);
    return count_;
  }

 private:
  mutable std::mutex mu_;
  double max_norm_deviation_ = 0.0;
  double max_energy_drift_ = 0.0;
  long long count_ = 0;
};

// Schroedinger propagator for one fixed Hermitian generator. Diagonalizes
// once; each apply() measures the actual norm and energy round-trip through
// the output state and reports the deviations to the EnergyAudit.
class Evolver {
 public:
  Evolver(const Operator& h, double hbar = 1.0, const Tolerances& tol = {})
      : h_(h.mat), hbar_(hbar) {
    if (!(hbar > 0.0)) throw std::invalid_argument("Evolver: hbar must be > 0");
    const double herr = hermiticity_error(h.mat);
    if (herr > tol.alg)
      throw std::invalid_argument("Evolver: generator not Hermitian, residual " +
                                  std::to_string(herr));
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h.mat);
    if (solver.info() != Eigen::Success)
      throw std::runtime_error("Evolver: eigendecomposition failed");
    vals_ = solver.eigenvalues();
    vecs_ = solver.eigenvectors();
  }

  int dim() const { return static_cast<int>(vals_.size()); }
  const RealVector& eigenvalues() const { return vals_; }
  const Matrix& eigenvectors() const { return vecs_; }
  double hbar() const { return hbar_; }

  Matrix unitary(double t) const { return vecs_ * phases(t).asDiagonal() * vecs_.adjoint(); }

  StateVector apply(double t, const StateVector& psi) const {
    if (psi.dim() != dim()) throw std::invalid_argument("Evolver: state dimension mismatch");
    const double energy_in = expectation(psi.amplitudes);
    Vector out = vecs_ * (phases(t).cwiseProduct(vecs_.adjoint() * psi.amplitudes));
    const double energy_out = expectation(out);
    EnergyAudit::instance().record(std::abs(out.norm() - psi.amplitudes.norm()),
                                   std::abs(energy_out - energy_in));
    return StateVector{std::move(out), psi.unnormalized};
  }

  double expectation(const Vector& v) const { return (v.adjoint() * (h_ * v))(0, 0).real(); }

 private:
  Vector phases(double t) const {
    Vector p(vals_.size());
    for (Eigen::Index i = 0; i < vals_.size(); ++i)
      p(i) = std::polar(1.0, -t * vals_(i) / hbar_);
    return p;
  }

  Matrix h_;
  RealVector vals_;
  Matrix vecs_;
  double hbar_;
};

// exp(-i t H / hbar) |psi>. For repeated evolutions under one H, build an
// Evolver instead.
inline StateVector evolve(const Operator& h, double t, const StateVector& psi, double hbar = 1.0,
                          const Tolerances& tol = {}) {
  return Evolver(h, hbar, tol).apply(t, psi);
}

// Exponentiated translation identity: || U(s)^dag A U(s) - (A + s mod period) ||_F
// for a diagonal Hermitian A, with U(s) = exp(-i s H / hbar). The shifted
// diagonal wraps into [min diag(A), min + period). This is the finite-scale
// form of canonical conjugacy; the infinitesimal commutator cannot hold on a
// finite grid (trace obstruction) and is deliberately not checked here.
inline double weyl_translation_check(const Operator& a, const Operator& h, double s, double hbar,
                                     double period, const Tolerances& tol = {}) {
  if (a.dim() != h.dim()) throw std::invalid_argument("weyl_translation_check: dimension mismatch");
  if (!(period > 0.0)) throw std::invalid_argument("weyl_translation_check: period must be > 0");
  if (offdiagonal_mass(a.mat) > tol.alg)
    throw std::invalid_argument("weyl_translation_check: A must be diagonal");
  if (hermiticity_error(a.mat) > tol.alg)
    throw std::invalid_argument("weyl_translation_check: A must be Hermitian");

  double lo = a.mat(0, 0).real();
  for (int j = 1; j < a.dim(); ++j) lo = std::min(lo, a.mat(j, j).real());

  const Matrix u = Evolver(h, hbar, tol).unitary(s);
  const Matrix conjugated = u.adjoint() * a.mat * u;

  Matrix expected = Matrix::Zero(a.dim(), a.dim());
  for (int j = 0; j < a.dim(); ++j)
    expected(j, j) = wrap_into_window(a.mat(j, j).real() + s, lo, period);

  return (conjugated - expected).norm();
}

}  // namespace tqslab
