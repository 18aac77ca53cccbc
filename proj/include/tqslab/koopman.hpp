#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "tqslab/certificate.hpp"
#include "tqslab/hilbert.hpp"

namespace tqslab {

// Deterministic time-reversible dynamical system, discretized to the time-dt
// subgroup: a finite state set, an invertible step map, positive invariant
// weights, and named real-valued properties. The weights live in the inner
// product; basis vectors stay normalized so property operators are literally
// diagonal.
struct DynamicalSystem {
  int state_count = 0;
  std::vector<int> step;       // alpha as an index map, must be a bijection
  std::vector<double> weights;  // mu_s > 0, invariant under the step
  std::map<std::string, std::vector<double>> properties;
  double dt = 1.0;

  void validate(const Tolerances& tol = {}) const {
    if (state_count < 1) throw std::invalid_argument("DynamicalSystem: need at least one state");
    if (static_cast<int>(step.size()) != state_count)
      throw std::invalid_argument("DynamicalSystem: step map size mismatch");
    std::vector<char> seen(state_count, 0);
    for (int t : step) {
      if (t < 0 || t >= state_count || seen[t])
        throw std::invalid_argument("DynamicalSystem: step map is not a bijection");
      seen[t] = 1;
    }
    if (static_cast<int>(weights.size()) != state_count)
      throw std::invalid_argument("DynamicalSystem: weight vector size mismatch");
    for (int s = 0; s < state_count; ++s) {
      if (!(weights[s] > 0.0))
        throw std::invalid_argument("DynamicalSystem: weights must be positive");
      const double drift = std::abs(weights[step[s]] - weights[s]);
      if (drift > tol.alg * std::max(1.0, weights[s]))
        throw std::invalid_argument("DynamicalSystem: step is not measure-preserving at state " +
                                    std::to_string(s));
    }
    for (const auto& [name, f] : properties)
      if (static_cast<int>(f.size()) != state_count)
        throw std::invalid_argument("DynamicalSystem: property '" + name +
                                    "' not defined on all states");
    if (!(dt > 0.0)) throw std::invalid_argument("DynamicalSystem: dt must be > 0");
  }
};

struct Orbit {
  int id = 0;
  int length = 0;
  std::vector<int> members;  // cycle order, starting from the smallest index
};

// Koopman lift: states become basis vectors, the step map a permutation
// unitary, and the generator is assembled orbit by orbit as the cyclic
// translation generator of each cycle (symmetric branch).
struct KoopmanRep {
  int dim = 0;
  Operator step_unitary;
  Operator hamiltonian;
  std::vector<Orbit> orbit_table;
  double dt = 1.0;
  double hbar = 1.0;
};

inline std::vector<Orbit> orbit_decomposition(const DynamicalSystem& sys) {
  std::vector<Orbit> orbits;
  std::vector<char> visited(sys.state_count, 0);
  for (int s = 0; s < sys.state_count; ++s) {
    if (visited[s]) continue;
    Orbit o;
    o.id = static_cast<int>(orbits.size());
    int cur = s;
    do {
      o.members.push_back(cur);
      visited[cur] = 1;
      cur = sys.step[cur];
    } while (cur != s);
    o.length = static_cast<int>(o.members.size());
    orbits.push_back(std::move(o));
  }
  return orbits;  // ordered by smallest member, which is the discovery order
}

inline KoopmanRep koopman_lift(const DynamicalSystem& sys, double hbar = 1.0,
                               const Tolerances& tol = {}) {
  sys.validate(tol);
  const int n = sys.state_count;

  Matrix u = Matrix::Zero(n, n);
  for (int s = 0; s < n; ++s) u(sys.step[s], s) = 1.0;

  std::vector<Orbit> orbits = orbit_decomposition(sys);
  Matrix h = Matrix::Zero(n, n);
  for (const auto& o : orbits) {
    const Operator block = translation_generator(GridSpec{o.length, sys.dt, 0.0}, hbar, tol);
    for (int i = 0; i < o.length; ++i)
      for (int j = 0; j < o.length; ++j) h(o.members[i], o.members[j]) = block.mat(i, j);
  }
  h = (0.5 * (h + h.adjoint().eval())).eval();

  return KoopmanRep{n,
                    make_operator(std::move(u), kUnitary | kPermutation, tol),
                    make_operator(std::move(h), kHermitian, tol),
                    std::move(orbits),
                    sys.dt,
                    hbar};
}

// Property f: S -> R as the diagonal operator diag(f(s)) in the canonical basis.
inline Operator observable_operator(const KoopmanRep& rep, const std::vector<double>& f,
                                    const Tolerances& tol = {}) {
  if (static_cast<int>(f.size()) != rep.dim)
    throw std::invalid_argument("observable_operator: property not defined on all states");
  RealVector d(rep.dim);
  for (int s = 0; s < rep.dim; ++s) d(s) = f[s];
  return diagonal_operator(d, tol);
}

struct Theorem3Result {
  TranslationalCertificate cert;
  bool basis_preserved = false;
  double max_basis_deviation = 0.0;
};

// Translational-form certificate for the lift, for systems whose orbits all
// share one length L: the generator spectrum is the L-point lattice with
// multiplicity = orbit count, and every U(k dt) maps canonical basis vectors
// to canonical basis vectors. Unequal orbit lengths mix incommensurate
// lattices and are refused.
inline Theorem3Result theorem3_certificate(const KoopmanRep& rep, const Tolerances& tol = {}) {
  if (rep.orbit_table.empty()) throw std::invalid_argument("theorem3_certificate: empty orbit table");
  const int len = rep.orbit_table.front().length;
  for (const auto& o : rep.orbit_table)
    if (o.length != len) {
      std::string lens;
      for (const auto& p : rep.orbit_table) lens += std::to_string(p.length) + " ";
      throw std::invalid_argument("theorem3_certificate: unequal orbit lengths ( " + lens +
                                  "), per-orbit lattices are incommensurate");
    }

  Theorem3Result out;
  out.cert = translational_certificate(rep.hamiltonian, rep.hbar, tol);

  // U(k dt) on each orbit, evaluated through the branch spectrum; the block
  // is circulant so its first column determines it.
  double worst = 0.0;
  for (const auto& o : rep.orbit_table) {
    const int L = o.length;
    const int lo = mode_range_low(L);
    for (int k = 0; k < L; ++k) {
      for (int r = 0; r < L; ++r) {
        Complex entry = 0.0;
        for (int c = 0; c < L; ++c) {
          const int mode = lo + c;
          entry += std::polar(1.0 / L, 2.0 * kPi * mode * (r - k) / L);
        }
        const double target = (r == k % L) ? 1.0 : 0.0;
        worst = std::max(worst, std::abs(entry - Complex(target)));
      }
    }
  }
  out.max_basis_deviation = worst;
  out.basis_preserved = worst <= tol.alg;
  return out;
}

// || exp(-i dt H / hbar) - step_unitary ||_F through a fresh eigendecomposition
// of the assembled generator; independent of the orbitwise construction.
inline double exp_consistency(const KoopmanRep& rep, const Tolerances& tol = {}) {
  return (Evolver(rep.hamiltonian, rep.hbar, tol).unitary(rep.dt) - rep.step_unitary.mat).norm();
}

// State set presented as a q x p product grid; index s = qi * n_p + pi.
struct PhaseGrid {
  GridSpec q;
  GridSpec p;

  int total() const { return q.n_points * p.n_points; }
  int index(int qi, int pi) const { return qi * p.n_points + pi; }
};

struct CcrDichotomyReport {
  double position_momentum_commutator = 0.0;  // ||[q, p]||, zero exactly
  double weyl_residual = 0.0;                 // conjugation of q by the q-shift
  double infinitesimal_defect = 0.0;          // ||[q, D_q] - i hbar I||, obstructed
  int shift_image_support = 0;                // nonzeros of D_q applied to one basis delta
  int diagonal_image_support = 0;             // nonzeros of q applied to the same delta
};

// Phase-space dichotomy: the two diagonal multiplication operators q and p
// commute exactly, while the differential shift generator D_q satisfies the
// exponentiated (Weyl) commutation relation with q. The infinitesimal
// relation [q, D_q] = i hbar has no finite-dimensional solution (the trace of
// a commutator vanishes), so its defect is reported, not required to vanish.
inline CcrDichotomyReport ccr_dichotomy_report(const KoopmanRep& rep, const PhaseGrid& grid,
                                               double shift_amount, const Tolerances& tol = {}) {
  grid.q.validate();
  grid.p.validate();
  if (grid.total() != rep.dim)
    throw std::invalid_argument("ccr_dichotomy_report: state set is not factorizable as the grid");

  const int nq = grid.q.n_points, np = grid.p.n_points;
  RealVector qvals(rep.dim), pvals(rep.dim);
  for (int qi = 0; qi < nq; ++qi)
    for (int pi = 0; pi < np; ++pi) {
      qvals(grid.index(qi, pi)) = grid.q.point(qi);
      pvals(grid.index(qi, pi)) = grid.p.point(pi);
    }
  const Operator qop = diagonal_operator(qvals, tol);
  const Operator pop = diagonal_operator(pvals, tol);

  CcrDichotomyReport out;
  out.position_momentum_commutator = (qop.mat * pop.mat - pop.mat * qop.mat).norm();

  const Operator dq_1d = translation_generator(grid.q, rep.hbar, tol);
  Matrix dq = kron(dq_1d.mat, Matrix::Identity(np, np));
  dq = (0.5 * (dq + dq.adjoint().eval())).eval();
  const Operator dq_op = make_operator(std::move(dq), kHermitian, tol);

  out.weyl_residual =
      weyl_translation_check(qop, dq_op, shift_amount, rep.hbar, grid.q.period(), tol);

  const Matrix comm = qop.mat * dq_op.mat - dq_op.mat * qop.mat;
  out.infinitesimal_defect =
      (comm - Complex(0.0, rep.hbar) * Matrix::Identity(rep.dim, rep.dim)).norm();

  const Vector delta = basis_state(rep.dim, grid.index(0, 0)).amplitudes;
  const Vector shifted = dq_op.mat * delta;
  const Vector scaled = qop.mat * delta;
  for (int s = 0; s < rep.dim; ++s) {
    if (std::abs(shifted(s)) > tol.alg) ++out.shift_image_support;
    if (std::abs(scaled(s)) > tol.alg) ++out.diagonal_image_support;
  }
  return out;
}

}  // namespace tqslab
