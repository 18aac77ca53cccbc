#pragma once

#include <vector>

#include "tqslab/certificate.hpp"
#include "tqslab/hilbert.hpp"

namespace tqslab {

// Non-interacting composition of a cyclic-grid clock with an arbitrary closed
// system: H = H_C (x) I + I (x) H_R.
struct CompositeSystem {
  GridSpec clock_grid;
  Operator system_hamiltonian;  // H_R
  Operator total_hamiltonian;
  double hbar = 1.0;

  int clock_dim() const { return clock_grid.n_points; }
  int system_dim() const { return system_hamiltonian.dim(); }
  int total_dim() const { return total_hamiltonian.dim(); }
};

inline CompositeSystem compose(const GridSpec& clock_grid, const Operator& h_r, double hbar = 1.0,
                               const Tolerances& tol = {}) {
  clock_grid.validate();
  if (hermiticity_error(h_r.mat) > tol.alg)
    throw std::invalid_argument("compose: system Hamiltonian not Hermitian");
  const Operator h_c = translation_generator(clock_grid, hbar, tol);
  const int m = h_r.dim();
  Matrix total = kron(h_c.mat, Matrix::Identity(m, m)) +
                 kron(Matrix::Identity(clock_grid.n_points, clock_grid.n_points), h_r.mat);
  total = (0.5 * (total + total.adjoint().eval())).eval();
  return CompositeSystem{clock_grid, h_r, make_operator(std::move(total), kHermitian, tol), hbar};
}

// A system energy the clock can track exactly must sit on the clock's own
// frequency lattice AND inside its symmetric mode window; on-lattice energies
// outside the window alias to a different mode.
struct Commensurability {
  double max_lattice_residual = 0.0;  // energy units, distance to the nearest lattice point
  bool in_window = true;
  std::vector<double> mode_numbers;  // E_r * period / (2 pi hbar), one per system level
};

inline Commensurability commensurability(const CompositeSystem& comp, const Tolerances& tol = {}) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(comp.system_hamiltonian.mat, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("commensurability: eigendecomposition failed");
  const double unit = 2.0 * kPi * comp.hbar / comp.clock_grid.period();
  const int n = comp.clock_grid.n_points;
  const int lo = mode_range_low(n);

  Commensurability out;
  for (Eigen::Index r = 0; r < solver.eigenvalues().size(); ++r) {
    const double mode = solver.eigenvalues()(r) / unit;
    out.mode_numbers.push_back(mode);
    const long long k = std::llround(mode);
    out.max_lattice_residual =
        std::max(out.max_lattice_residual, std::abs(mode - static_cast<double>(k)) * unit);
    // the clock constraint sees -k as the mode; it must be representable
    if (-k < lo || -k > lo + n - 1) out.in_window = false;
  }
  (void)tol;
  return out;
}

struct GramCheck {
  double max_offdiag = 0.0;
  double max_diag_deviation = 0.0;
  int vector_count = 0;
};

// Builds the histories U(k*dt)(|eta(0)> (x) |b>) for k = 0..n-1 and every
// supplied system state, then measures how far their Gram matrix is from the
// identity. Orthogonality of the histories certifies mutual orthogonality of
// the V_b subspaces; with a full system basis the histories exhaust the total
// space. |eta(0)> is the clock delta at grid index 0.
inline GramCheck history_gram_check(const CompositeSystem& comp,
                                    const std::vector<StateVector>& b_states,
                                    const Tolerances& tol = {}) {
  if (b_states.empty()) throw std::invalid_argument("history_gram_check: no system states");
  for (const auto& b : b_states)
    if (b.dim() != comp.system_dim())
      throw std::invalid_argument("history_gram_check: system state dimension mismatch");
  for (std::size_t i = 0; i < b_states.size(); ++i)
    for (std::size_t j = 0; j < b_states.size(); ++j) {
      const Complex g = b_states[i].amplitudes.adjoint() * b_states[j].amplitudes;
      if (std::abs(g - (i == j ? Complex(1.0) : Complex(0.0))) > tol.spec)
        throw std::invalid_argument("history_gram_check: input states not orthonormal");
    }

  const int n = comp.clock_dim();
  const Evolver ev(comp.total_hamiltonian, comp.hbar, tol);
  const Vector eta0 = basis_state(n, 0).amplitudes;

  std::vector<Vector> histories;
  histories.reserve(static_cast<std::size_t>(n) * b_states.size());
  for (int k = 0; k < n; ++k) {
    const Matrix u = ev.unitary(k * comp.clock_grid.spacing);
    for (const auto& b : b_states) histories.push_back(u * kron(eta0, b.amplitudes));
  }

  GramCheck out;
  out.vector_count = static_cast<int>(histories.size());
  const int count = out.vector_count;
  std::vector<double> row_offdiag(count, 0.0), row_diag(count, 0.0);
  parallel_for(0, count, [&](int i) {
    row_diag[i] = std::abs(histories[i].norm() - 1.0);
    double worst = 0.0;
    for (int j = i + 1; j < count; ++j)
      worst = std::max(worst, std::abs(Complex(histories[i].adjoint() * histories[j])));
    row_offdiag[i] = worst;
  });
  for (int i = 0; i < count; ++i) {
    out.max_diag_deviation = std::max(out.max_diag_deviation, row_diag[i]);
    out.max_offdiag = std::max(out.max_offdiag, row_offdiag[i]);
  }
  return out;
}

// Translational-form certificate for the composite. The raw Kronecker-sum
// spectrum pushes clock modes past the symmetric window whenever E_r != 0,
// so the total generator is first re-branched (eigenvalues folded to the
// symmetric window, which is (i hbar / dt) log U(dt)) and the folded
// spectrum is handed to the lattice certificate. Expected outcome for a
// commensurate system: d = dim(H_R), step = clock step.
inline TranslationalCertificate theorem2_certificate(const CompositeSystem& comp,
                                                     const Tolerances& tol = {}) {
  const Commensurability com = commensurability(comp, tol);
  if (com.max_lattice_residual > tol.spec)
    throw std::invalid_argument(
        "theorem2_certificate: system spectrum incommensurate with the clock lattice, "
        "nearest-lattice residual " +
        std::to_string(com.max_lattice_residual));

  Eigen::SelfAdjointEigenSolver<Matrix> solver(comp.total_hamiltonian.mat, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("theorem2_certificate: eigendecomposition failed");
  const double window = 2.0 * kPi * comp.hbar / comp.clock_grid.spacing;
  RealVector folded = solver.eigenvalues();
  for (Eigen::Index i = 0; i < folded.size(); ++i) folded(i) = fold_to_branch(folded(i), window);
  std::sort(folded.data(), folded.data() + folded.size());
  return lattice_certificate(folded, comp.hbar, tol);
}

struct PageWoottersResult {
  StateVector state;  // unnormalized by construction
  double constraint_residual = 0.0;   // ||H |Psi>|| / || |Psi> ||
  double invariance_residual = 0.0;   // ||U(dt)|Psi> - |Psi>|| / || |Psi> ||
};

// Finite-sum history state |Psi> = sum_k |tau_k> (x) U_R(k dt)|psi0>. Under
// commensurability (lattice + window) it is annihilated by the total
// Hamiltonian and invariant under the one-step evolution. Both residuals are
// computed unconditionally so that incommensurate inputs report their aliasing
// failure instead of being rejected silently.
inline PageWoottersResult page_wootters_state(const CompositeSystem& comp,
                                              const StateVector& psi0, const Tolerances& tol = {}) {
  if (psi0.dim() != comp.system_dim())
    throw std::invalid_argument("page_wootters_state: system state dimension mismatch");

  const int n = comp.clock_dim();
  const int m = comp.system_dim();
  const double dt = comp.clock_grid.spacing;
  const Evolver ev_r(comp.system_hamiltonian, comp.hbar, tol);

  Vector psi = Vector::Zero(static_cast<Eigen::Index>(n) * m);
  for (int k = 0; k < n; ++k)
    psi.segment(static_cast<Eigen::Index>(k) * m, m) = ev_r.apply(k * dt, psi0).amplitudes;

  const double norm = psi.norm();
  const Evolver ev_total(comp.total_hamiltonian, comp.hbar, tol);
  const double constraint = (comp.total_hamiltonian.mat * psi).norm() / norm;
  const double invariance = (ev_total.unitary(dt) * psi - psi).norm() / norm;

  return PageWoottersResult{make_unnormalized_state(std::move(psi)), constraint, invariance};
}

}  // namespace tqslab
