#pragma once

#include <map>
#include <string>
#include <vector>

#include "tqslab/certificate.hpp"
#include "tqslab/hilbert.hpp"
#include "tqslab/koopman.hpp"

namespace tqslab {

// The bare quantum data of a system: Hamiltonian, a state history generated
// from one initial state, and (crucially, and outside the triple proper) the
// named observables that carry its physical content.
struct QuantumTriple {
  Operator hamiltonian;
  StateVector initial_state;
  std::map<std::string, Operator> observables;
  double dt = 1.0;    // native time step for word-trace invariants
  double hbar = 1.0;

  StateVector trajectory(double t, const Tolerances& tol = {}) const {
    return Evolver(hamiltonian, hbar, tol).apply(t, initial_state);
  }
};

inline QuantumTriple make_koopman_triple(const KoopmanRep& rep,
                                         const std::map<std::string, std::vector<double>>& props,
                                         int initial_state_index, const Tolerances& tol = {}) {
  QuantumTriple t{rep.hamiltonian, basis_state(rep.dim, initial_state_index), {}, rep.dt, rep.hbar};
  for (const auto& [name, f] : props) t.observables.emplace(name, observable_operator(rep, f, tol));
  return t;
}

// Common dimension of all energy eigenspaces of a translational Hamiltonian.
inline int multiplicity(const Operator& h, double hbar = 1.0, const Tolerances& tol = {}) {
  const TranslationalCertificate cert = translational_certificate(h, hbar, tol);
  if (!cert.passes)
    throw std::invalid_argument("multiplicity: operator is not translational (" +
                                cert.failure_reason + ")");
  return cert.multiplicity;
}

struct IntertwinerResult {
  Operator matrix;
  bool trajectory_matched = true;
  double max_anchor_mismatch = 0.0;  // per-eigenspace anchor norm discrepancy
};

namespace detail {

// Unitary on C^d sending unit vector a to unit vector b, completed
// deterministically from the standard basis with canonical phases.
inline Matrix rotation_mapping(const Vector& a, const Vector& b) {
  const auto d = a.size();
  auto complete = [d](const Vector& first) {
    Matrix basis(d, d);
    basis.col(0) = first;
    Eigen::Index filled = 1;
    for (Eigen::Index cand = 0; cand < d && filled < d; ++cand) {
      Vector v = Vector::Zero(d);
      v(cand) = 1.0;
      for (Eigen::Index c = 0; c < filled; ++c) v -= (basis.col(c).adjoint() * v)(0, 0) * basis.col(c);
      const double n = v.norm();
      if (n > 1e-6) {
        basis.col(filled++) = v / n;
      }
    }
    if (filled != d) throw std::runtime_error("rotation_mapping: orthonormal completion failed");
    return canonical_phase_columns(std::move(basis)).eval();
  };
  Matrix ma = complete(a / a.norm());
  ma.col(0) = a / a.norm();  // keep the anchor column exact, phases fix the rest
  Matrix mb = complete(b / b.norm());
  mb.col(0) = b / b.norm();
  return mb * ma.adjoint();
}

struct EigenspaceDecomposition {
  RealVector values;
  Matrix vectors;
  std::vector<std::pair<int, int>> clusters;  // (first index, count) per lattice point
};

inline EigenspaceDecomposition decompose(const Operator& h, const Tolerances& tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h.mat);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("build_intertwiner: eigendecomposition failed");
  EigenspaceDecomposition out{solver.eigenvalues(), canonical_phase_columns(solver.eigenvectors()), {}};
  int first = 0;
  for (int i = 1; i <= out.values.size(); ++i) {
    if (i == out.values.size() || out.values(i) - out.values(i - 1) > tol.spec) {
      out.clusters.emplace_back(first, i - first);
      first = i;
    }
  }
  return out;
}

}  // namespace detail

// Explicit unitary M with M H1 M^dag = H2, built by matching eigenspaces
// lattice point by lattice point; inside each eigenspace the degeneracy
// rotation aligns the two anchored states psi1(t1) -> psi2(t2). Eigenspaces
// in which either anchor has no component (or the component norms disagree,
// which no unitary can fix) are completed canonically instead, and the result
// is demoted to a Hamiltonian-only intertwiner.
inline IntertwinerResult build_intertwiner(const QuantumTriple& t1, const QuantumTriple& t2,
                                           double anchor_time_1, double anchor_time_2,
                                           const Tolerances& tol = {}) {
  if (t1.hamiltonian.dim() != t2.hamiltonian.dim())
    throw std::invalid_argument("build_intertwiner: dimension mismatch");
  const TranslationalCertificate c1 = translational_certificate(t1.hamiltonian, t1.hbar, tol);
  const TranslationalCertificate c2 = translational_certificate(t2.hamiltonian, t2.hbar, tol);
  if (!c1.passes || !c2.passes)
    throw std::invalid_argument("build_intertwiner: both Hamiltonians must be translational");
  if (c1.multiplicity != c2.multiplicity)
    throw std::invalid_argument("build_intertwiner: multiplicity mismatch, d1 = " +
                                std::to_string(c1.multiplicity) + " vs d2 = " +
                                std::to_string(c2.multiplicity));
  if (std::abs(c1.lattice_step - c2.lattice_step) > tol.spec)
    throw std::invalid_argument("build_intertwiner: lattice step mismatch");

  const auto d1 = detail::decompose(t1.hamiltonian, tol);
  const auto d2 = detail::decompose(t2.hamiltonian, tol);
  if (d1.clusters.size() != d2.clusters.size())
    throw std::invalid_argument("build_intertwiner: eigenspace count mismatch");

  const Vector psi1 = t1.trajectory(anchor_time_1, tol).amplitudes;
  const Vector psi2 = t2.trajectory(anchor_time_2, tol).amplitudes;

  IntertwinerResult out;
  const int n = t1.hamiltonian.dim();
  Matrix m = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < d1.clusters.size(); ++k) {
    const auto [f1, cnt1] = d1.clusters[k];
    const auto [f2, cnt2] = d2.clusters[k];
    if (cnt1 != cnt2) throw std::invalid_argument("build_intertwiner: eigenspace size mismatch");
    const Matrix v1 = d1.vectors.middleCols(f1, cnt1);
    const Matrix v2 = d2.vectors.middleCols(f2, cnt2);

    const Vector a = v1.adjoint() * psi1;
    const Vector b = v2.adjoint() * psi2;
    const double na = a.norm(), nb = b.norm();
    const double mismatch = std::abs(na - nb);
    out.max_anchor_mismatch = std::max(out.max_anchor_mismatch, mismatch);

    Matrix rot;
    if (na <= tol.spec || nb <= tol.spec || mismatch > tol.spec) {
      out.trajectory_matched = false;
      rot = Matrix::Identity(cnt1, cnt1);
    } else {
      rot = detail::rotation_mapping(a, b);
    }
    m += v2 * rot * v1.adjoint();
  }

  out.matrix = make_operator(std::move(m), kUnitary, tol);
  return out;
}

struct InvariantMismatch {
  std::string word;
  double value_1 = 0.0;
  double value_2 = 0.0;
  double gap = 0.0;
};

struct InequivalenceCertificate {
  double triple_match_residual = 0.0;  // max of Hamiltonian conjugation and anchor mismatch
  std::map<std::string, double> observable_map_distances;  // ||M f1 M^dag - f2|| per name
  std::vector<InvariantMismatch> invariants;               // full word-trace table
  std::vector<InvariantMismatch> mismatches;               // entries with gap > tol.gap

  // same triple residual, yet at least one structural invariant gap
  bool valid(const Tolerances& tol = {}) const {
    return triple_match_residual <= tol.alg && !mismatches.empty();
  }
};

// Word-trace invariants of the pair (evolution, observable): moments tr(f^j)
// and step autocorrelations C(k) = tr(f U(k dt) f U(-k dt)). All are
// preserved under simultaneous unitary conjugation, so any gap above tol.gap
// proves that no unitary maps (H1, f1) to (H2, f2) even when M matches the
// bare triples.
inline InequivalenceCertificate inequivalence_report(const QuantumTriple& t1,
                                                     const QuantumTriple& t2, const Operator& m,
                                                     int max_word_len, const Tolerances& tol = {},
                                                     double anchor_time_1 = 0.0,
                                                     double anchor_time_2 = 0.0) {
  if (t1.observables.size() != t2.observables.size())
    throw std::invalid_argument("inequivalence_report: observable lists differ in length");
  for (const auto& [name, op] : t1.observables)
    if (!t2.observables.count(name))
      throw std::invalid_argument("inequivalence_report: unpaired observable '" + name + "'");
  if (max_word_len < 1) throw std::invalid_argument("inequivalence_report: max_word_len must be >= 1");

  InequivalenceCertificate cert;

  const Matrix conj_h = m.mat * t1.hamiltonian.mat * m.mat.adjoint() - t2.hamiltonian.mat;
  const double anchor_gap = (m.mat * t1.trajectory(anchor_time_1, tol).amplitudes -
                             t2.trajectory(anchor_time_2, tol).amplitudes)
                                .norm();
  cert.triple_match_residual = std::max(conj_h.norm(), anchor_gap);

  const Evolver ev1(t1.hamiltonian, t1.hbar, tol);
  const Evolver ev2(t2.hamiltonian, t2.hbar, tol);

  for (const auto& [name, f1] : t1.observables) {
    const Operator& f2 = t2.observables.at(name);
    cert.observable_map_distances[name] =
        (m.mat * f1.mat * m.mat.adjoint() - f2.mat).norm();

    Matrix pow1 = f1.mat, pow2 = f2.mat;
    for (int j = 1; j <= max_word_len; ++j) {
      InvariantMismatch inv;
      inv.word = "tr(f^" + std::to_string(j) + ")[" + name + "]";
      inv.value_1 = pow1.trace().real();
      inv.value_2 = pow2.trace().real();
      inv.gap = std::abs(inv.value_1 - inv.value_2);
      cert.invariants.push_back(inv);
      if (j < max_word_len) {
        pow1 = (pow1 * f1.mat).eval();
        pow2 = (pow2 * f2.mat).eval();
      }
    }

    for (int k = 1; k <= max_word_len; ++k) {
      const Matrix u1 = ev1.unitary(k * t1.dt);
      const Matrix u2 = ev2.unitary(k * t2.dt);
      InvariantMismatch inv;
      inv.word = "C(" + std::to_string(k) + ")[" + name + "]";
      inv.value_1 = (f1.mat * u1 * f1.mat * u1.adjoint()).trace().real();
      inv.value_2 = (f2.mat * u2 * f2.mat * u2.adjoint()).trace().real();
      inv.gap = std::abs(inv.value_1 - inv.value_2);
      cert.invariants.push_back(inv);
    }
  }

  for (const auto& inv : cert.invariants)
    if (inv.gap > tol.gap) cert.mismatches.push_back(inv);
  return cert;
}

}  // namespace tqslab
