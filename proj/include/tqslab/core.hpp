#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tqslab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Numerical contract: `alg` bounds pure linear-algebra residuals, `spec`
// bounds spectral/lattice identification, `gap` is the threshold above which
// an invariant mismatch counts as structural. Defaults hold in double
// precision for dense operators up to a few thousand dimensions.
struct Tolerances {
  double alg = 1e-10;
  double spec = 1e-8;
  double gap = 1e-6;
};

// Uniform cyclic grid standing in for one continuum coordinate.
// Index j lives at coordinate origin + j*spacing; the grid closes after
// n_points steps, so the represented coordinate window is [origin, origin+period).
struct GridSpec {
  int n_points = 1;
  double spacing = 1.0;
  double origin = 0.0;

  double period() const { return n_points * spacing; }
  double point(int j) const { return origin + j * spacing; }

  void validate() const {
    if (n_points < 1) throw std::invalid_argument("GridSpec: n_points must be >= 1");
    if (!(spacing > 0.0)) throw std::invalid_argument("GridSpec: spacing must be > 0");
    if (!std::isfinite(origin)) throw std::invalid_argument("GridSpec: origin must be finite");
  }
};

enum OpFlag : unsigned {
  kHermitian = 1u << 0,
  kUnitary = 1u << 1,
  kDiagonal = 1u << 2,
  kPermutation = 1u << 3,
};

inline double hermiticity_error(const Matrix& a) { return (a - a.adjoint()).norm(); }

inline double unitarity_error(const Matrix& a) {
  return (a.adjoint() * a - Matrix::Identity(a.rows(), a.cols())).norm();
}

inline double offdiagonal_mass(const Matrix& a) {
  Matrix off = a;
  off.diagonal().setZero();
  return off.norm();
}

inline bool is_permutation_matrix(const Matrix& a, double tol) {
  const auto n = a.rows();
  if (n != a.cols()) return false;
  for (Eigen::Index r = 0; r < n; ++r) {
    int hits = 0;
    for (Eigen::Index c = 0; c < n; ++c) {
      const double m = std::abs(a(r, c));
      if (std::abs(m - 1.0) <= tol && std::abs(a(r, c).imag()) <= tol && a(r, c).real() > 0.0)
        ++hits;
      else if (m > tol)
        return false;
    }
    if (hits != 1) return false;
  }
  for (Eigen::Index c = 0; c < n; ++c) {
    int hits = 0;
    for (Eigen::Index r = 0; r < n; ++r)
      if (std::abs(std::abs(a(r, c)) - 1.0) <= tol) ++hits;
    if (hits != 1) return false;
  }
  return true;
}

// Dense complex square matrix plus structure flags. Every asserted flag is
// re-verified numerically at construction time; a flag that does not hold
// within tol.alg is a logic error in the caller.
struct Operator {
  Matrix mat;
  unsigned flags = 0;

  int dim() const { return static_cast<int>(mat.rows()); }
  bool has(OpFlag f) const { return (flags & f) != 0; }
};

inline Operator make_operator(Matrix m, unsigned flags, const Tolerances& tol = {}) {
  if (m.rows() != m.cols()) throw std::invalid_argument("Operator: matrix must be square");
  if (m.rows() < 1) throw std::invalid_argument("Operator: dimension must be >= 1");
  if (flags & kHermitian) {
    const double err = hermiticity_error(m);
    if (err > tol.alg)
      throw std::invalid_argument("Operator: hermitian flag violated, residual " + std::to_string(err));
  }
  if (flags & kUnitary) {
    const double err = unitarity_error(m);
    if (err > tol.alg)
      throw std::invalid_argument("Operator: unitary flag violated, residual " + std::to_string(err));
  }
  if (flags & kDiagonal) {
    const double err = offdiagonal_mass(m);
    if (err > tol.alg)
      throw std::invalid_argument("Operator: diagonal flag violated, residual " + std::to_string(err));
  }
  if (flags & kPermutation) {
    if (!is_permutation_matrix(m, tol.alg))
      throw std::invalid_argument("Operator: permutation flag violated");
  }
  return Operator{std::move(m), flags};
}

inline Operator diagonal_operator(const RealVector& d, const Tolerances& tol = {}) {
  Matrix m = Matrix::Zero(d.size(), d.size());
  m.diagonal() = d.cast<Complex>();
  return make_operator(std::move(m), kHermitian | kDiagonal, tol);
}

// Complex amplitude vector. Unit norm is the contract for every physical
// state; the Page-Wootters aggregate is the one sanctioned exception and must
// carry the `unnormalized` flag.
struct StateVector {
  Vector amplitudes;
  bool unnormalized = false;

  int dim() const { return static_cast<int>(amplitudes.size()); }
  double norm() const { return amplitudes.norm(); }
};

inline StateVector make_state(Vector v, const Tolerances& tol = {}) {
  if (v.size() < 1) throw std::invalid_argument("StateVector: dimension must be >= 1");
  const double n = v.norm();
  if (std::abs(n - 1.0) > tol.alg)
    throw std::invalid_argument("StateVector: not normalized, |psi| = " + std::to_string(n));
  return StateVector{std::move(v), false};
}

inline StateVector make_unnormalized_state(Vector v) {
  if (v.size() < 1) throw std::invalid_argument("StateVector: dimension must be >= 1");
  return StateVector{std::move(v), true};
}

inline StateVector basis_state(int dim, int index) {
  if (index < 0 || index >= dim) throw std::invalid_argument("basis_state: index out of range");
  Vector v = Vector::Zero(dim);
  v(index) = 1.0;
  return StateVector{std::move(v), false};
}

// Signed Fourier mode range ceil(-n/2) .. ceil(n/2)-1, enumerated ascending.
inline int mode_range_low(int n) { return -(n / 2); }

// Wraps x into [lo, lo+period). Values landing within snap*period of the top
// edge are folded to lo: they are exact lattice wraps blurred by roundoff,
// and leaving them at the edge would misreport a full-period residual.
inline double wrap_into_window(double x, double lo, double period, double snap = 1e-9) {
  double r = std::fmod(x - lo, period);
  if (r < 0.0) r += period;
  if (period - r < snap * period) r = 0.0;
  return lo + r;
}

// Worker cap for the internally parallelizable loops (set from TQSLAB_THREADS
// by the CLI). Work items write disjoint slots and reductions run after the
// join in index order, so results are identical for every cap value.
inline int& thread_cap_ref() {
  static int cap = 1;
  return cap;
}
inline int thread_cap() { return thread_cap_ref(); }
inline void set_thread_cap(int n) { thread_cap_ref() = n < 1 ? 1 : n; }

template <class Fn>
void parallel_for(int begin, int end, Fn&& fn) {
  const int total = end - begin;
  const int cap = thread_cap();
  if (cap <= 1 || total <= 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  const int workers = std::min(cap, total);
  std::atomic<int> next{begin};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&next, end, &fn] {
      for (int i = next.fetch_add(1); i < end; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

}  // namespace tqslab
