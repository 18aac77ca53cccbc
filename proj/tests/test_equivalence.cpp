#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "tqslab/equivalence.hpp"

using namespace tqslab;

namespace {

DynamicalSystem cycle_with_property(int n, const std::vector<double>& f,
                                    const std::string& name = "f") {
  DynamicalSystem sys;
  sys.state_count = n;
  for (int s = 0; s < n; ++s) sys.step.push_back((s + 1) % n);
  sys.weights.assign(n, 1.0);
  sys.properties[name] = f;
  return sys;
}

QuantumTriple cycle_triple(int n, const std::vector<double>& f) {
  const DynamicalSystem sys = cycle_with_property(n, f);
  return make_koopman_triple(koopman_lift(sys), sys.properties, 0);
}

// Brute-force word-trace oracle: explicit sums over basis states and
// permutation powers, no matrix products anywhere.
double oracle_moment(const std::vector<double>& f, int j) {
  double acc = 0.0;
  for (double v : f) acc += std::pow(v, j);
  return acc;
}

double oracle_autocorrelation(const std::vector<double>& f, const std::vector<int>& step, int k) {
  double acc = 0.0;
  for (std::size_t s = 0; s < f.size(); ++s) {
    std::size_t target = s;
    for (int i = 0; i < k; ++i) target = step[target];
    acc += f[s] * f[target];
  }
  return acc;
}

double invariant_value(const InequivalenceCertificate& cert, const std::string& word, int side) {
  for (const auto& inv : cert.invariants)
    if (inv.word == word) return side == 1 ? inv.value_1 : inv.value_2;
  FAIL("missing invariant " + word);
  return 0.0;
}

// Haar-random unitary via QR of a Ginibre matrix with phase-fixed R diagonal.
Matrix haar_unitary(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix z(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) z(r, c) = Complex(g(rng), g(rng));
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int c = 0; c < n; ++c) {
    const Complex d = r(c, c);
    q.col(c) *= std::abs(d) > 0.0 ? d / std::abs(d) : Complex(1.0);
  }
  return q;
}

}  // namespace

TEST_CASE("multiplicity of translational Hamiltonians") {
  REQUIRE(multiplicity(translation_generator(GridSpec{6, 1.0, 0.0})) == 1);

  const Operator h0 = translation_generator(GridSpec{4, 1.0, 0.0});
  const Matrix h = kron(h0.mat, Matrix::Identity(3, 3));
  REQUIRE(multiplicity(make_operator(h, kHermitian)) == 3);

  DynamicalSystem sys;
  sys.state_count = 8;
  sys.step = {1, 2, 3, 0, 5, 6, 7, 4};  // two 4-cycles
  sys.weights.assign(8, 1.0);
  REQUIRE(multiplicity(koopman_lift(sys).hamiltonian) == 2);

  RealVector bad(3);
  bad << 0.0, 0.0, 1.0;
  REQUIRE_THROWS_AS(multiplicity(diagonal_operator(bad)), std::invalid_argument);
}

TEST_CASE("self-intertwining is the identity") {
  const QuantumTriple t = cycle_triple(8, {0, 1, 2, 3, 4, 5, 6, 7});
  const IntertwinerResult iw = build_intertwiner(t, t, 0.0, 0.0);
  REQUIRE(iw.trajectory_matched);
  REQUIRE(unitarity_error(iw.matrix.mat) <= 1e-10);
  REQUIRE((iw.matrix.mat * t.hamiltonian.mat * iw.matrix.mat.adjoint() - t.hamiltonian.mat).norm() <=
          1e-10);
  REQUIRE((iw.matrix.mat * t.initial_state.amplitudes - t.initial_state.amplitudes).norm() <= 1e-10);
}

TEST_CASE("intertwiner between two distinct 8-cycle systems") {
  // same dynamics up to a relabeling of the state set
  DynamicalSystem left = cycle_with_property(8, {0, 1, 2, 3, 4, 5, 6, 7});
  DynamicalSystem right = cycle_with_property(8, {0, 0, 1, 1, 2, 2, 3, 3});
  right.step = {3, 0, 1, 6, 2, 4, 7, 5};  // still one 8-cycle
  {
    std::vector<char> seen(8, 0);
    int cur = 0, count = 0;
    do {
      seen[cur] = 1;
      cur = right.step[cur];
      ++count;
    } while (cur != 0);
    REQUIRE(count == 8);
  }

  const QuantumTriple t1 = make_koopman_triple(koopman_lift(left), left.properties, 0);
  const QuantumTriple t2 = make_koopman_triple(koopman_lift(right), right.properties, 0);

  const IntertwinerResult iw = build_intertwiner(t1, t2, 0.0, 0.0);
  REQUIRE(iw.trajectory_matched);
  REQUIRE(unitarity_error(iw.matrix.mat) <= 1e-10);
  REQUIRE((iw.matrix.mat * t1.hamiltonian.mat * iw.matrix.mat.adjoint() - t2.hamiltonian.mat)
              .norm() <= 1e-10);
  REQUIRE((iw.matrix.mat * t1.initial_state.amplitudes - t2.initial_state.amplitudes).norm() <=
          1e-10);
}

TEST_CASE("anchor concentrated in one eigenspace demotes to Hamiltonian-only") {
  // the uniform vector is the zero mode of the cycle generator: it has no
  // component in any other eigenspace, so no unitary can match it to a delta
  QuantumTriple t1 = cycle_triple(8, {0, 1, 2, 3, 4, 5, 6, 7});
  t1.initial_state = StateVector{Vector::Constant(8, Complex(1.0 / std::sqrt(8.0))), false};
  const QuantumTriple t2 = cycle_triple(8, {0, 1, 2, 3, 4, 5, 6, 7});

  const IntertwinerResult iw = build_intertwiner(t1, t2, 0.0, 0.0);
  REQUIRE_FALSE(iw.trajectory_matched);
  REQUIRE(iw.max_anchor_mismatch > 0.1);
  REQUIRE(unitarity_error(iw.matrix.mat) <= 1e-10);
  REQUIRE((iw.matrix.mat * t1.hamiltonian.mat * iw.matrix.mat.adjoint() - t2.hamiltonian.mat)
              .norm() <= 1e-10);
}

TEST_CASE("multiplicity mismatch is refused") {
  const QuantumTriple t1 = cycle_triple(8, {0, 1, 2, 3, 4, 5, 6, 7});

  DynamicalSystem two_cycles = cycle_with_property(8, {0, 1, 2, 3, 0, 1, 2, 3});
  two_cycles.step = {1, 2, 3, 0, 5, 6, 7, 4};
  const QuantumTriple t2 =
      make_koopman_triple(koopman_lift(two_cycles), two_cycles.properties, 0);

  REQUIRE_THROWS_AS(build_intertwiner(t1, t2, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("word traces match the brute-force oracle") {
  const std::vector<double> f1{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<double> f2(8);
  for (int s = 0; s < 8; ++s) f2[s] = static_cast<double>((s * s) % 8);

  const QuantumTriple t1 = cycle_triple(8, f1);
  const QuantumTriple t2 = cycle_triple(8, f2);
  const IntertwinerResult iw = build_intertwiner(t1, t2, 0.0, 0.0);
  const InequivalenceCertificate cert = inequivalence_report(t1, t2, iw.matrix, 3);

  std::vector<int> step{1, 2, 3, 4, 5, 6, 7, 0};
  for (int j = 1; j <= 3; ++j) {
    const std::string word = "tr(f^" + std::to_string(j) + ")[f]";
    REQUIRE(invariant_value(cert, word, 1) == Catch::Approx(oracle_moment(f1, j)).margin(1e-10));
    REQUIRE(invariant_value(cert, word, 2) == Catch::Approx(oracle_moment(f2, j)).margin(1e-10));
  }
  for (int k = 1; k <= 3; ++k) {
    const std::string word = "C(" + std::to_string(k) + ")[f]";
    REQUIRE(invariant_value(cert, word, 1) ==
            Catch::Approx(oracle_autocorrelation(f1, step, k)).margin(1e-10));
    REQUIRE(invariant_value(cert, word, 2) ==
            Catch::Approx(oracle_autocorrelation(f2, step, k)).margin(1e-10));
  }
}

TEST_CASE("counterexample: same triple, different physics") {
  const std::vector<double> f1{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<double> f2(8);
  for (int s = 0; s < 8; ++s) f2[s] = static_cast<double>((s * s) % 8);

  const QuantumTriple t1 = cycle_triple(8, f1);
  const QuantumTriple t2 = cycle_triple(8, f2);
  const IntertwinerResult iw = build_intertwiner(t1, t2, 0.0, 0.0);
  const InequivalenceCertificate cert = inequivalence_report(t1, t2, iw.matrix, 4);

  REQUIRE(cert.triple_match_residual <= 1e-10);
  REQUIRE_FALSE(cert.mismatches.empty());
  double max_gap = 0.0;
  for (const auto& inv : cert.mismatches) max_gap = std::max(max_gap, inv.gap);
  REQUIRE(max_gap >= 0.1);
  REQUIRE(cert.valid());

  SECTION("no unitary closes the gap: Haar search sanity check") {
    // |tr f1 - tr f2| = 16, so every unitary W keeps
    // ||W f1 W^dag - f2||_F >= 16 / sqrt(8)
    const double bound =
        std::abs(oracle_moment(f1, 1) - oracle_moment(f2, 1)) / std::sqrt(8.0);
    REQUIRE(bound > 1.0);
    std::mt19937_64 rng(424242);
    const Matrix f1m = t1.observables.at("f").mat;
    const Matrix f2m = t2.observables.at("f").mat;
    for (int trial = 0; trial < 100; ++trial) {
      const Matrix w = haar_unitary(8, rng);
      const double dist = (w * f1m * w.adjoint() - f2m).norm();
      REQUIRE(dist >= bound - 1e-9);
    }
  }
}

TEST_CASE("different phase-grid factorizations of equal total dimension") {
  // 64 states, four 16-cycles on both sides; the observables encode a 4 x 16
  // grid on the left and an 8 x 8 grid on the right. The triples intertwine,
  // the factorization content does not.
  auto blocks_of_16 = [](int nq, int np) {
    DynamicalSystem sys;
    sys.state_count = 64;
    sys.step.resize(64);
    for (int b = 0; b < 4; ++b)
      for (int i = 0; i < 16; ++i) sys.step[b * 16 + i] = b * 16 + (i + 1) % 16;
    sys.weights.assign(64, 1.0);
    std::vector<double> q(64), p(64);
    for (int s = 0; s < 64; ++s) {
      q[s] = static_cast<double>(s / np);
      p[s] = static_cast<double>(s % np);
    }
    (void)nq;
    sys.properties["q"] = q;
    sys.properties["p"] = p;
    return sys;
  };
  const DynamicalSystem left = blocks_of_16(4, 16);
  const DynamicalSystem right = blocks_of_16(8, 8);

  const QuantumTriple t1 = make_koopman_triple(koopman_lift(left), left.properties, 0);
  const QuantumTriple t2 = make_koopman_triple(koopman_lift(right), right.properties, 0);
  REQUIRE(multiplicity(t1.hamiltonian) == 4);
  REQUIRE(multiplicity(t2.hamiltonian) == 4);

  const IntertwinerResult iw = build_intertwiner(t1, t2, 0.0, 0.0);
  REQUIRE(iw.trajectory_matched);
  const InequivalenceCertificate cert = inequivalence_report(t1, t2, iw.matrix, 3);
  REQUIRE(cert.triple_match_residual <= 1e-10);
  REQUIRE(cert.valid());
  double max_gap = 0.0;
  for (const auto& inv : cert.mismatches) max_gap = std::max(max_gap, inv.gap);
  REQUIRE(max_gap >= 0.1);
}

TEST_CASE("relabeling by a power of the dynamics erases all gaps") {
  const std::vector<double> f1{0.5, -1.0, 2.0, 3.5, -0.25, 1.0, 4.0, -2.0};
  std::vector<double> f2(8);
  for (int s = 0; s < 8; ++s) f2[s] = f1[(s + 3) % 8];  // f1 composed with alpha^3

  const QuantumTriple t1 = cycle_triple(8, f1);
  const QuantumTriple t2 = cycle_triple(8, f2);
  const IntertwinerResult iw = build_intertwiner(t1, t2, 0.0, 0.0);
  const InequivalenceCertificate cert = inequivalence_report(t1, t2, iw.matrix, 4);

  for (const auto& inv : cert.invariants) REQUIRE(inv.gap <= 1e-10);
  REQUIRE(cert.mismatches.empty());
  REQUIRE_FALSE(cert.valid());
}

TEST_CASE("reflexive report has zero gaps and is not a valid certificate") {
  const QuantumTriple t = cycle_triple(6, {0, 1, 2, 3, 4, 5});
  Operator identity = make_operator(Matrix::Identity(6, 6), kUnitary | kPermutation);
  const InequivalenceCertificate cert = inequivalence_report(t, t, identity, 3);
  REQUIRE(cert.triple_match_residual <= 1e-12);
  for (const auto& inv : cert.invariants) REQUIRE(inv.gap <= 1e-12);
  REQUIRE_FALSE(cert.valid());
}

TEST_CASE("observable pairing is by name") {
  QuantumTriple t1 = cycle_triple(4, {0, 1, 2, 3});
  QuantumTriple t2 = cycle_triple(4, {0, 1, 2, 3});
  t2.observables.clear();
  t2.observables.emplace("g", t1.observables.at("f"));
  Operator identity = make_operator(Matrix::Identity(4, 4), kUnitary);
  REQUIRE_THROWS_AS(inequivalence_report(t1, t2, identity, 2), std::invalid_argument);
}
