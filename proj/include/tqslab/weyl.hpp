#pragma once

#include "tqslab/certificate.hpp"
#include "tqslab/hilbert.hpp"

namespace tqslab {

enum class Chirality { kPlus, kMinus };
enum class Spin { kUp, kDown };

inline int sign_of(Chirality c) { return c == Chirality::kPlus ? +1 : -1; }
inline int sign_of(Spin s) { return s == Spin::kUp ? +1 : -1; }

// Massless chiral planar wave along z: spin (x) space with
// H = -(chirality sign) * c * sigma_z (x) p_z. The Hermitian reading of the
// chiral Hamiltonian is used (the momentum carries the factor i).
struct WeylModel {
  GridSpec z_grid;
  Chirality chirality = Chirality::kPlus;
  double c = 1.0;
  double hbar = 1.0;

  int total_dim() const { return 2 * z_grid.n_points; }
  void validate() const {
    z_grid.validate();
    if (!(c > 0.0)) throw std::invalid_argument("WeylModel: c must be > 0");
    if (!(hbar > 0.0)) throw std::invalid_argument("WeylModel: hbar must be > 0");
  }
};

inline Operator build_weyl_hamiltonian(const WeylModel& model, const Tolerances& tol = {}) {
  model.validate();
  const Operator p = translation_generator(model.z_grid, model.hbar, tol);
  Matrix sigma_z = Matrix::Zero(2, 2);
  sigma_z(0, 0) = 1.0;
  sigma_z(1, 1) = -1.0;
  Matrix h = -sign_of(model.chirality) * model.c * kron(sigma_z, p.mat);
  h = (0.5 * (h + h.adjoint().eval())).eval();
  return make_operator(std::move(h), kHermitian, tol);
}

// Grid-steps moved per light-crossing time, by convention:
// direction = -(chirality sign) * (spin sign). Reported with every check.
inline int shift_direction(Chirality c, Spin s) { return -sign_of(c) * sign_of(s); }

// One spin block of H restricted to the given spin.
inline Operator weyl_spin_block(const WeylModel& model, Spin spin, const Tolerances& tol = {}) {
  model.validate();
  const Operator p = translation_generator(model.z_grid, model.hbar, tol);
  const double factor = -sign_of(model.chirality) * sign_of(spin) * model.c;
  Matrix h = factor * p.mat;
  h = (0.5 * (h + h.adjoint().eval())).eval();
  return make_operator(std::move(h), kHermitian, tol);
}

struct LightlikeShift {
  double residual = 0.0;
  int direction = 0;    // signed grid steps per unit k
  int start_index = 0;  // z index of the initial position eigenstate
};

// Rigid transport: a position eigenstate delta_{z0} (x) |spin> evolved for
// t = k*dz/c must land on delta at z0 + direction*k (cyclically). The start
// site is index 0; the grid is periodic so k may wrap. The overload taking an
// Evolver must receive one built from build_weyl_hamiltonian(model).
inline LightlikeShift lightlike_shift_check(const WeylModel& model, Spin spin, int k,
                                            const Evolver& propagator,
                                            const Tolerances& tol = {}) {
  model.validate();
  const int n = model.z_grid.n_points;
  if (std::abs(k) > n) throw std::invalid_argument("lightlike_shift_check: |k| must be <= n");
  if (propagator.dim() != model.total_dim())
    throw std::invalid_argument("lightlike_shift_check: propagator dimension mismatch");
  (void)tol;

  const int spin_index = spin == Spin::kUp ? 0 : 1;
  const int start = 0;
  const int dir = shift_direction(model.chirality, spin);

  Vector spinor = Vector::Zero(2);
  spinor(spin_index) = 1.0;
  const Vector initial = kron(spinor, basis_state(n, start).amplitudes);

  const double t = k * model.z_grid.spacing / model.c;
  const StateVector evolved = propagator.apply(t, StateVector{initial, false});

  const int target = ((start + dir * k) % n + n) % n;
  const Vector expected = kron(spinor, basis_state(n, target).amplitudes);
  return LightlikeShift{(evolved.amplitudes - expected).norm(), dir, start};
}

inline LightlikeShift lightlike_shift_check(const WeylModel& model, Spin spin, int k,
                                            const Tolerances& tol = {}) {
  const Operator h = build_weyl_hamiltonian(model, tol);
  return lightlike_shift_check(model, spin, k, Evolver(h, model.hbar, tol), tol);
}

// || [H, sigma_z (x) I] ||_F; the spin blocks never mix.
inline double spin_block_commutator(const WeylModel& model, const Tolerances& tol = {}) {
  const Operator h = build_weyl_hamiltonian(model, tol);
  const int n = model.z_grid.n_points;
  Matrix sz = Matrix::Zero(2, 2);
  sz(0, 0) = 1.0;
  sz(1, 1) = -1.0;
  const Matrix szi = kron(sz, Matrix::Identity(n, n));
  return (h.mat * szi - szi * h.mat).norm();
}

}  // namespace tqslab
