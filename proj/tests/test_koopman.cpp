#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <random>

#include "tqslab/koopman.hpp"

using namespace tqslab;

namespace {

DynamicalSystem cycle_system(int n, double dt = 1.0) {
  DynamicalSystem sys;
  sys.state_count = n;
  for (int s = 0; s < n; ++s) sys.step.push_back((s + 1) % n);
  sys.weights.assign(n, 1.0);
  sys.dt = dt;
  return sys;
}

// Random permutation made of `orbits` cycles of length `len`, fixed seed.
DynamicalSystem equal_orbit_system(int orbits, int len, std::mt19937& rng, double dt = 1.0) {
  const int n = orbits * len;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  DynamicalSystem sys;
  sys.state_count = n;
  sys.step.assign(n, 0);
  for (int o = 0; o < orbits; ++o)
    for (int i = 0; i < len; ++i)
      sys.step[order[o * len + i]] = order[o * len + (i + 1) % len];
  sys.weights.assign(n, 1.0);
  sys.dt = dt;
  return sys;
}

int permutation_power(const DynamicalSystem& sys, int s, int k) {
  int cur = s;
  for (int i = 0; i < k; ++i) cur = sys.step[cur];
  return cur;
}

}  // namespace

TEST_CASE("koopman lift of a single cycle") {
  const DynamicalSystem sys = cycle_system(6);
  const KoopmanRep rep = koopman_lift(sys);

  SECTION("step unitary is the 6-cycle permutation") {
    REQUIRE(rep.step_unitary.has(kPermutation));
    REQUIRE((rep.step_unitary.mat - cyclic_shift(6)).norm() <= 1e-14);
  }
  SECTION("generator spectrum is the 6-point lattice") {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(rep.hamiltonian.mat, Eigen::EigenvaluesOnly);
    for (int i = 0; i < 6; ++i)
      REQUIRE(solver.eigenvalues()(i) ==
              Catch::Approx(2.0 * kPi * (i - 3) / 6.0).margin(1e-12));
  }
  SECTION("orbit table has one orbit of length 6") {
    REQUIRE(rep.orbit_table.size() == 1);
    REQUIRE(rep.orbit_table[0].length == 6);
    REQUIRE(rep.orbit_table[0].members == std::vector<int>{0, 1, 2, 3, 4, 5});
  }
}

TEST_CASE("koopman lift of fixed points and disjoint cycles") {
  SECTION("identity map lifts to U = I, H = 0") {
    DynamicalSystem sys;
    sys.state_count = 3;
    sys.step = {0, 1, 2};
    sys.weights = {1.0, 1.0, 1.0};
    const KoopmanRep rep = koopman_lift(sys);
    REQUIRE((rep.step_unitary.mat - Matrix::Identity(3, 3)).norm() <= 1e-14);
    REQUIRE(rep.hamiltonian.mat.norm() <= 1e-14);
    REQUIRE(rep.orbit_table.size() == 3);
  }
  SECTION("two 4-cycles double the spectrum multiplicity") {
    std::mt19937 rng(31);
    const DynamicalSystem sys = equal_orbit_system(2, 4, rng);
    const KoopmanRep rep = koopman_lift(sys);
    const auto cert = translational_certificate(rep.hamiltonian);
    REQUIRE(cert.passes);
    REQUIRE(cert.multiplicity == 2);
  }
  SECTION("non-bijective step map is rejected") {
    DynamicalSystem sys;
    sys.state_count = 3;
    sys.step = {1, 1, 2};
    sys.weights = {1.0, 1.0, 1.0};
    REQUIRE_THROWS_AS(koopman_lift(sys), std::invalid_argument);
  }
  SECTION("measure must be invariant under the step") {
    DynamicalSystem sys = cycle_system(3);
    sys.weights = {1.0, 2.0, 1.0};
    REQUIRE_THROWS_AS(koopman_lift(sys), std::invalid_argument);
  }
  SECTION("weights constant per orbit are a valid invariant measure") {
    DynamicalSystem sys;
    sys.state_count = 7;
    sys.step = {1, 2, 0, 4, 5, 6, 3};  // a 3-cycle and a 4-cycle
    sys.weights = {2.5, 2.5, 2.5, 0.5, 0.5, 0.5, 0.5};
    const KoopmanRep rep = koopman_lift(sys);
    REQUIRE(unitarity_error(rep.step_unitary.mat) <= 1e-12);
    REQUIRE(rep.orbit_table.size() == 2);
  }
}

TEST_CASE("observable operators are diagonal and commute") {
  const DynamicalSystem sys = cycle_system(6);
  const KoopmanRep rep = koopman_lift(sys);
  std::vector<double> f{0, 1, 2, 3, 4, 5};
  std::vector<double> ones(6, 1.0);
  const Operator fop = observable_operator(rep, f);
  const Operator id = observable_operator(rep, ones);

  for (int j = 0; j < 6; ++j) REQUIRE(fop.mat(j, j).real() == Catch::Approx(double(j)));
  REQUIRE((id.mat - Matrix::Identity(6, 6)).norm() <= 1e-14);
  REQUIRE((fop.mat * id.mat - id.mat * fop.mat).norm() == 0.0);

  std::vector<double> g{1, 0, 3, 0, 5, 0};
  const Operator gop = observable_operator(rep, g);
  REQUIRE((fop.mat * gop.mat - gop.mat * fop.mat).norm() == 0.0);
}

TEST_CASE("theorem 3 certificate") {
  SECTION("single 8-cycle: d = 1, basis preserved") {
    const KoopmanRep rep = koopman_lift(cycle_system(8));
    const Theorem3Result res = theorem3_certificate(rep);
    REQUIRE(res.cert.passes);
    REQUIRE(res.cert.multiplicity == 1);
    REQUIRE(res.basis_preserved);
    REQUIRE(res.cert.lattice_step == Catch::Approx(2.0 * kPi / 8.0).margin(1e-10));
  }
  SECTION("three 4-cycles: d = 3") {
    std::mt19937 rng(77);
    const KoopmanRep rep = koopman_lift(equal_orbit_system(3, 4, rng));
    const Theorem3Result res = theorem3_certificate(rep);
    REQUIRE(res.cert.passes);
    REQUIRE(res.cert.multiplicity == 3);
    REQUIRE(res.basis_preserved);
  }
  SECTION("orbit lengths 4 and 6 are refused") {
    DynamicalSystem sys;
    sys.state_count = 10;
    sys.step = {1, 2, 3, 0, 5, 6, 7, 8, 9, 4};
    sys.weights.assign(10, 1.0);
    REQUIRE_THROWS_AS(theorem3_certificate(koopman_lift(sys)), std::invalid_argument);
  }
}

TEST_CASE("permutation dynamics under the lifted evolution") {
  std::mt19937 rng(123);
  const DynamicalSystem sys = equal_orbit_system(2, 5, rng, 0.5);
  const KoopmanRep rep = koopman_lift(sys);

  SECTION("exp(-i dt H) reproduces the permutation") {
    REQUIRE(exp_consistency(rep) <= 1e-10);
  }
  SECTION("U(k dt)|s> = |alpha^k(s)> through an independent diagonalization") {
    const Evolver ev(rep.hamiltonian, rep.hbar);
    for (int k : {0, 1, 2, 3, 4}) {
      const Matrix u = ev.unitary(k * rep.dt);
      for (int s = 0; s < rep.dim; ++s) {
        Vector expected = basis_state(rep.dim, permutation_power(sys, s, k)).amplitudes;
        REQUIRE((u.col(s) - expected).norm() <= 1e-10);
      }
    }
  }
  SECTION("unitarity of the step for every valid system") {
    REQUIRE(unitarity_error(rep.step_unitary.mat) <= 1e-12);
  }
}

TEST_CASE("commutation dichotomy on a phase grid") {
  // 4 x 4 torus: shift the q coordinate by one each step
  DynamicalSystem sys;
  sys.state_count = 16;
  sys.step.resize(16);
  for (int q = 0; q < 4; ++q)
    for (int p = 0; p < 4; ++p) sys.step[q * 4 + p] = ((q + 1) % 4) * 4 + p;
  sys.weights.assign(16, 1.0);
  const KoopmanRep rep = koopman_lift(sys);
  const PhaseGrid grid{GridSpec{4, 1.0, 0.0}, GridSpec{4, 1.0, 0.0}};

  const CcrDichotomyReport report = ccr_dichotomy_report(rep, grid, grid.q.spacing);

  SECTION("diagonal coordinates commute exactly") {
    REQUIRE(report.position_momentum_commutator == 0.0);
  }
  SECTION("weyl conjugation along q holds") { REQUIRE(report.weyl_residual <= 1e-12); }
  SECTION("infinitesimal CCR is obstructed") {
    REQUIRE(report.infinitesimal_defect > 0.1);
    // trace lower bound: || [q, D_q] - i hbar I ||_F >= hbar sqrt(dim)
    REQUIRE(report.infinitesimal_defect >= std::sqrt(16.0) - 1e-9);
  }
  SECTION("shift generators superpose, diagonals rescale") {
    REQUIRE(report.shift_image_support >= 2);
    REQUIRE(report.diagonal_image_support <= 1);
  }
  SECTION("a non-factorizable grid is rejected") {
    const PhaseGrid bad{GridSpec{3, 1.0, 0.0}, GridSpec{4, 1.0, 0.0}};
    REQUIRE_THROWS_AS(ccr_dichotomy_report(rep, bad, 1.0), std::invalid_argument);
  }
}
