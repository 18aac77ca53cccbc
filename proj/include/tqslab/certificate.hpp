#pragma once

#include <string>
#include <vector>

#include "tqslab/core.hpp"

namespace tqslab {

// Verdict on whether a Hermitian operator is a finite-scale translation
// generator: its spectrum must be a uniform frequency lattice
// hbar * lattice_step * {k} over a contiguous symmetric integer window, with
// every lattice point carrying the same multiplicity d.
struct TranslationalCertificate {
  bool passes = false;
  double lattice_step = 0.0;  // angular frequency units
  int multiplicity = 0;
  double max_residual = 0.0;
  std::string failure_reason;
};

struct SpectralCluster {
  double mean = 0.0;
  int count = 0;
};

inline std::vector<SpectralCluster> cluster_spectrum(const RealVector& sorted_eigs,
                                                     double cluster_tol) {
  std::vector<SpectralCluster> clusters;
  for (Eigen::Index i = 0; i < sorted_eigs.size(); ++i) {
    if (clusters.empty() || sorted_eigs(i) - sorted_eigs(i - 1) > cluster_tol) {
      clusters.push_back({sorted_eigs(i), 1});
    } else {
      auto& c = clusters.back();
      c.mean = (c.mean * c.count + sorted_eigs(i)) / (c.count + 1);
      ++c.count;
    }
  }
  return clusters;
}

// Lattice test on an already sorted eigenvalue list. A single cluster is a
// degenerate one-point lattice: it passes with step 0 and d = dim, since no
// step is measurable from one point.
inline TranslationalCertificate lattice_certificate(const RealVector& sorted_eigs, double hbar,
                                                    const Tolerances& tol = {}) {
  TranslationalCertificate cert;
  if (sorted_eigs.size() == 0) {
    cert.failure_reason = "empty spectrum";
    return cert;
  }
  const auto clusters = cluster_spectrum(sorted_eigs, tol.spec);
  const int m = static_cast<int>(clusters.size());

  if (m == 1) {
    cert.passes = true;
    cert.lattice_step = 0.0;
    cert.multiplicity = clusters[0].count;
    double spread = 0.0;
    for (Eigen::Index i = 0; i < sorted_eigs.size(); ++i)
      spread = std::max(spread, std::abs(sorted_eigs(i) - clusters[0].mean));
    cert.max_residual = spread;
    return cert;
  }

  const int d = clusters[0].count;
  for (const auto& c : clusters) {
    if (c.count != d) {
      cert.failure_reason = "multiplicity not constant across lattice points";
      return cert;
    }
  }

  // step in angular frequency units: eigenvalues are hbar * step * k
  double step = (clusters.back().mean - clusters.front().mean) / ((m - 1) * hbar);
  if (!(step > 0.0)) {
    cert.failure_reason = "degenerate lattice step";
    return cert;
  }

  // Integer lattice coordinates, then one least-squares refinement of the step.
  std::vector<long long> k(m);
  for (int i = 0; i < m; ++i) k[i] = std::llround(clusters[i].mean / (hbar * step));
  double num = 0.0, den = 0.0;
  for (int i = 0; i < m; ++i) {
    num += static_cast<double>(k[i]) * clusters[i].mean;
    den += static_cast<double>(k[i]) * static_cast<double>(k[i]);
  }
  if (den > 0.0) step = num / (hbar * den);

  for (int i = 0; i < m; ++i) k[i] = std::llround(clusters[i].mean / (hbar * step));
  for (int i = 1; i < m; ++i) {
    if (k[i] != k[i - 1] + 1) {
      cert.failure_reason = "lattice points not contiguous integers";
      return cert;
    }
  }
  // symmetric branch window, up to one edge mode on either side (a mirrored
  // generator such as -H carries the reflected window on even grids)
  const long long lo = k.front(), hi = k.back();
  if (std::llabs(lo + hi) > 1) {
    cert.failure_reason = "integer window not symmetric";
    return cert;
  }

  double resid = 0.0;
  {
    int idx = 0;
    for (int i = 0; i < m; ++i)
      for (int c = 0; c < clusters[i].count; ++c, ++idx)
        resid = std::max(resid, std::abs(sorted_eigs(idx) - hbar * step * k[i]));
  }
  if (resid > tol.spec) {
    cert.failure_reason = "lattice residual above tolerance";
    cert.max_residual = resid;
    return cert;
  }

  cert.passes = true;
  cert.lattice_step = step;
  cert.multiplicity = d;
  cert.max_residual = resid;
  return cert;
}

inline TranslationalCertificate translational_certificate(const Operator& h, double hbar = 1.0,
                                                          const Tolerances& tol = {}) {
  if (hermiticity_error(h.mat) > tol.alg)
    throw std::invalid_argument("translational_certificate: operator not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h.mat, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("translational_certificate: eigendecomposition failed");
  return lattice_certificate(solver.eigenvalues(), hbar, tol);
}

// Folds an energy into the symmetric branch window [-W/2, W/2) with
// W = 2 pi hbar / spacing, i.e. the eigenvalue of (i hbar / spacing) log U
// for U = exp(-i spacing H / hbar). Values within snap of the +W/2 edge are
// exact Nyquist modes blurred by roundoff and fold to -W/2.
inline double fold_to_branch(double energy, double window, double snap = 1e-9) {
  const double r = energy / window;
  double frac = r - std::floor(r + 0.5);  // in [-1/2, 1/2)
  if (0.5 - frac < snap) frac = -0.5;
  return frac * window;
}

// Deterministic eigenvector phases: each column is rotated so its entry of
// largest magnitude (first index on ties) is real positive.
inline Matrix canonical_phase_columns(Matrix v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index best = 0;
    double best_mag = 0.0;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      const double m = std::abs(v(r, c));
      if (m > best_mag) {
        best_mag = m;
        best = r;
      }
    }
    if (best_mag > 0.0) v.col(c) *= std::conj(v(best, c)) / best_mag;
  }
  return v;
}

}  // namespace tqslab
