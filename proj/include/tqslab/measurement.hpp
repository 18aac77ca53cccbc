#pragma once

#include <vector>

#include "tqslab/certificate.hpp"
#include "tqslab/hilbert.hpp"

namespace tqslab {

struct EigenvalueBlock {
  double eigenvalue = 0.0;  // lambda, nonzero
  int degeneracy = 1;
};

// Ideal pre-measurement setup: observed system with a finite nondegenerate-
// per-lambda spectrum coupled to a pointer living on a cyclic grid. The
// interaction g * O (x) p_M drives the pointer from its ready position
// (the zeta = 0 grid point) to zeta = g*T*lambda.
struct MeasurementModel {
  std::vector<EigenvalueBlock> spectrum;
  GridSpec pointer_grid;
  double coupling = 1.0;  // g
  double duration = 1.0;  // T
  double hbar = 1.0;

  int system_dim() const {
    int d = 0;
    for (const auto& b : spectrum) d += b.degeneracy;
    return d;
  }
  int total_dim() const { return system_dim() * pointer_grid.n_points; }

  // grid index of the ready pointer state zeta = 0
  int ready_index(const Tolerances& tol = {}) const {
    const double steps = -pointer_grid.origin / pointer_grid.spacing;
    const long long k = std::llround(steps);
    if (std::abs(steps - static_cast<double>(k)) > tol.alg || k < 0 || k >= pointer_grid.n_points)
      throw std::invalid_argument("MeasurementModel: zeta = 0 is not a pointer grid point");
    return static_cast<int>(k);
  }

  // system eigenvalue of each system basis index, degeneracy blocks in order
  std::vector<double> block_eigenvalues() const {
    std::vector<double> v;
    for (const auto& b : spectrum)
      for (int a = 0; a < b.degeneracy; ++a) v.push_back(b.eigenvalue);
    return v;
  }

  void validate(const Tolerances& tol = {}) const {
    pointer_grid.validate();
    if (spectrum.empty()) throw std::invalid_argument("MeasurementModel: empty spectrum");
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
      if (spectrum[i].eigenvalue == 0.0)
        throw std::invalid_argument("MeasurementModel: eigenvalue 0 is reserved for the ready state");
      if (spectrum[i].degeneracy < 1)
        throw std::invalid_argument("MeasurementModel: degeneracy must be >= 1");
      for (std::size_t j = i + 1; j < spectrum.size(); ++j)
        if (spectrum[i].eigenvalue == spectrum[j].eigenvalue)
          throw std::invalid_argument("MeasurementModel: duplicate eigenvalue in spectrum");
    }
    if (coupling == 0.0) throw std::invalid_argument("MeasurementModel: coupling must be nonzero");
    if (duration < 0.0) throw std::invalid_argument("MeasurementModel: duration must be >= 0");
    if (!(hbar > 0.0)) throw std::invalid_argument("MeasurementModel: hbar must be > 0");
    (void)ready_index(tol);
  }
};

// H = g * O (x) p_M with O = diag(lambda per degeneracy) on the system factor
// and p_M the grid conjugate of the pointer coordinate. Free Hamiltonians of
// both factors are dropped.
inline Operator build_interaction_hamiltonian(const MeasurementModel& model,
                                              const Tolerances& tol = {}) {
  model.validate(tol);
  const auto lambdas = model.block_eigenvalues();
  Matrix o = Matrix::Zero(lambdas.size(), lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) o(i, i) = lambdas[i];
  const Operator p = translation_generator(model.pointer_grid, model.hbar, tol);
  Matrix h = model.coupling * kron(o, p.mat);
  h = (0.5 * (h + h.adjoint().eval())).eval();
  return make_operator(std::move(h), kHermitian, tol);
}

struct GridAlignmentError : std::runtime_error {
  GridAlignmentError(const std::string& msg, double leak)
      : std::runtime_error(msg), leakage(leak) {}
  double leakage;  // norm of the evolved pointer state off its nearest grid delta
};

struct WrapAroundError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// Pointer state after e^{-(i/hbar) shift p_M} |ready>, computed in the mode basis.
inline Vector shifted_ready_pointer(const MeasurementModel& model, double shift,
                                    const Tolerances& tol) {
  const Operator p = translation_generator(model.pointer_grid, model.hbar, tol);
  const Evolver ev(p, model.hbar, tol);
  return ev.unitary(shift) * basis_state(model.pointer_grid.n_points,
                                         model.ready_index(tol)).amplitudes;
}

}  // namespace detail

// Unitary pre-measurement stage: U(T) (system_state (x) |ready>).
// Pointer shifts g*T*lambda must land on grid points; off-grid shifts raise
// GridAlignmentError carrying the off-grid leakage. Shifts that run past the
// coordinate window raise WrapAroundError unless allow_wrap is set (the grid
// is cyclic, so a wrap is well defined but usually signals a bad model).
inline StateVector simulate_measurement(const MeasurementModel& model,
                                        const StateVector& system_state, bool allow_wrap = false,
                                        const Tolerances& tol = {}) {
  model.validate(tol);
  if (system_state.dim() != model.system_dim())
    throw std::invalid_argument("simulate_measurement: system state dimension mismatch");

  const int n = model.pointer_grid.n_points;
  const int ready = model.ready_index(tol);
  for (const auto& b : model.spectrum) {
    const double shift = model.coupling * model.duration * b.eigenvalue;
    const double steps = shift / model.pointer_grid.spacing;
    const long long k = std::llround(steps);
    if (std::abs(steps - static_cast<double>(k)) > tol.alg) {
      const Vector moved = detail::shifted_ready_pointer(model, shift, tol);
      const int target = static_cast<int>(((k % n) + n) % n + ready) % n;
      const double leak = std::sqrt(std::max(0.0, 1.0 - std::norm(moved(target))));
      throw GridAlignmentError("simulate_measurement: pointer shift " + std::to_string(shift) +
                                   " is not a grid multiple; off-grid leakage " +
                                   std::to_string(leak),
                               leak);
    }
    if (!allow_wrap && (ready + k < 0 || ready + k >= n))
      throw WrapAroundError("simulate_measurement: pointer shift " + std::to_string(shift) +
                            " leaves the grid window");
  }

  const Operator h = build_interaction_hamiltonian(model, tol);
  const Vector joint = kron(system_state.amplitudes,
                            basis_state(n, ready).amplitudes);
  return Evolver(h, model.hbar, tol).apply(model.duration, StateVector{joint, false});
}

// Block-diagonal time operator of the interaction: (g lambda)^{-1} M on each
// |lambda, a> (x) pointer block; diagonal in the product basis.
inline Operator construct_time_operator(const MeasurementModel& model, const Tolerances& tol = {}) {
  model.validate(tol);
  const auto lambdas = model.block_eigenvalues();
  const int n = model.pointer_grid.n_points;
  RealVector d(model.total_dim());
  for (std::size_t a = 0; a < lambdas.size(); ++a)
    for (int j = 0; j < n; ++j)
      d(static_cast<Eigen::Index>(a) * n + j) =
          model.pointer_grid.point(j) / (model.coupling * lambdas[a]);
  return diagonal_operator(d, tol);
}

struct HeisenbergCheck {
  double residual = 0.0;
  int sign = +1;  // global sign convention sigma in tau -> tau + sigma*s
};

// Translation law on the total space: conjugating the time operator by U(s)
// advances every block's tau eigenvalues by the same s (mod each block's tau
// period), which is the operational content of the translational form.
// The sign convention is fixed on the first spectrum block and applied
// globally. s must shift every block by a whole number of pointer steps.
inline HeisenbergCheck heisenberg_translation_check(const MeasurementModel& model, double s,
                                                    const Tolerances& tol = {}) {
  model.validate(tol);
  for (const auto& b : model.spectrum) {
    const double steps = model.coupling * b.eigenvalue * s / model.pointer_grid.spacing;
    if (std::abs(steps - std::llround(steps)) > tol.alg)
      throw std::invalid_argument(
          "heisenberg_translation_check: no common grid-aligned step, lambda = " +
          std::to_string(b.eigenvalue) + " shifts " + std::to_string(steps) + " pointer steps");
  }

  const Operator tau = construct_time_operator(model, tol);
  const Operator h = build_interaction_hamiltonian(model, tol);
  const Matrix u = Evolver(h, model.hbar, tol).unitary(s);
  const Matrix conjugated = u.adjoint() * tau.mat * u;

  const auto lambdas = model.block_eigenvalues();
  const int n = model.pointer_grid.n_points;
  const double zeta_period = model.pointer_grid.period();

  auto expected_for_sign = [&](int sigma, std::size_t block) {
    RealVector d(n);
    const double tau_period = zeta_period / std::abs(model.coupling * lambdas[block]);
    double lo = tau.mat(static_cast<Eigen::Index>(block) * n, static_cast<Eigen::Index>(block) * n)
                    .real();
    for (int j = 1; j < n; ++j)
      lo = std::min(lo, tau.mat(block * n + j, block * n + j).real());
    for (int j = 0; j < n; ++j)
      d(j) = wrap_into_window(tau.mat(block * n + j, block * n + j).real() + sigma * s, lo,
                              tau_period);
    return d;
  };

  // fix sigma on the first block
  int sigma = +1;
  if (s != 0.0) {
    double best = -1.0;
    for (int cand : {+1, -1}) {
      const RealVector d = expected_for_sign(cand, 0);
      double r = 0.0;
      for (int j = 0; j < n; ++j) r += std::norm(conjugated(j, j) - Complex(d(j)));
      r = std::sqrt(r);
      if (best < 0.0 || r < best) {
        best = r;
        sigma = cand;
      }
    }
  }

  Matrix expected = Matrix::Zero(tau.dim(), tau.dim());
  for (std::size_t a = 0; a < lambdas.size(); ++a) {
    const RealVector d = expected_for_sign(sigma, a);
    for (int j = 0; j < n; ++j) expected(a * n + j, a * n + j) = d(j);
  }

  return HeisenbergCheck{(conjugated - expected).norm(), sigma};
}

}  // namespace tqslab
