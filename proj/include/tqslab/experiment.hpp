#pragma once

#include <chrono>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tqslab/clock.hpp"
#include "tqslab/equivalence.hpp"
#include "tqslab/koopman.hpp"
#include "tqslab/measurement.hpp"
#include "tqslab/report.hpp"
#include "tqslab/weyl.hpp"

namespace tqslab {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

namespace cfg {

inline const Json& require(const Json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("config: missing field '") + key + "'");
  return j.at(key);
}

inline double number(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_number()) throw ConfigError(std::string("config: '") + key + "' must be a number");
  return v.get<double>();
}

inline double number_or(const Json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j, key) : fallback;
}

inline int integer(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_number_integer()) throw ConfigError(std::string("config: '") + key + "' must be an integer");
  return v.get<int>();
}

inline bool flag_or(const Json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw ConfigError(std::string("config: '") + key + "' must be a boolean");
  return j.at(key).get<bool>();
}

inline GridSpec grid(const Json& j, const std::string& what) {
  if (!j.is_object()) throw ConfigError("config: '" + what + "' must be an object");
  GridSpec g;
  g.n_points = integer(j, "n_points");
  g.spacing = number(j, "spacing");
  g.origin = number_or(j, "origin", 0.0);
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config: " + what + ": " + e.what());
  }
  return g;
}

inline Complex complex_entry(const Json& v, const std::string& what) {
  if (v.is_number()) return Complex(v.get<double>(), 0.0);
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return Complex(v[0].get<double>(), v[1].get<double>());
  throw ConfigError("config: " + what + " entries must be numbers or [re, im] pairs");
}

inline Vector complex_vector(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError("config: '" + what + "' must be a nonempty array");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = complex_entry(j[i], what);
  return v;
}

inline Matrix complex_matrix(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError("config: '" + what + "' must be a nonempty array of rows");
  const std::size_t n = j.size();
  Matrix m(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    if (!j[r].is_array() || j[r].size() != n)
      throw ConfigError("config: '" + what + "' must be square");
    for (std::size_t c = 0; c < n; ++c) m(r, c) = complex_entry(j[r][c], what);
  }
  return m;
}

}  // namespace cfg

inline MeasurementModel measurement_model_from_config(const Json& j, double hbar) {
  MeasurementModel model;
  const Json& spec = cfg::require(j, "spectrum");
  if (!spec.is_array() || spec.empty())
    throw ConfigError("config: 'spectrum' must be a nonempty array");
  for (const auto& entry : spec) {
    EigenvalueBlock b;
    b.eigenvalue = cfg::number(entry, "eigenvalue");
    b.degeneracy = entry.contains("degeneracy") ? cfg::integer(entry, "degeneracy") : 1;
    model.spectrum.push_back(b);
  }
  model.pointer_grid = cfg::grid(cfg::require(j, "pointer"), "pointer");
  model.coupling = cfg::number_or(j, "coupling", 1.0);
  model.duration = cfg::number_or(j, "duration", 1.0);
  model.hbar = hbar;
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return model;
}

inline DynamicalSystem dynamical_system_from_config(const Json& j) {
  DynamicalSystem sys;
  sys.state_count = cfg::integer(j, "states");
  const Json& step = cfg::require(j, "step");
  if (!step.is_array()) throw ConfigError("config: 'step' must be an array of target indices");
  for (const auto& v : step) {
    if (!v.is_number_integer()) throw ConfigError("config: 'step' entries must be integers");
    sys.step.push_back(v.get<int>());
  }
  if (j.contains("weights")) {
    for (const auto& v : cfg::require(j, "weights")) sys.weights.push_back(v.get<double>());
  } else {
    sys.weights.assign(sys.state_count, 1.0);
  }
  if (j.contains("properties")) {
    const Json& props = j.at("properties");
    if (!props.is_object()) throw ConfigError("config: 'properties' must be an object");
    for (const auto& [name, table] : props.items()) {
      if (!table.is_array()) throw ConfigError("config: property '" + name + "' must be an array");
      std::vector<double> f;
      for (const auto& v : table) f.push_back(v.get<double>());
      sys.properties[name] = std::move(f);
    }
  }
  sys.dt = cfg::number_or(j, "dt", 1.0);
  try {
    sys.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return sys;
}

inline CompositeSystem composite_from_config(const Json& j, double hbar, const Tolerances& tol) {
  const GridSpec clock_grid = cfg::grid(cfg::require(j, "clock"), "clock");
  const Json& sys = cfg::require(j, "system");
  Matrix h_r;
  if (sys.contains("diagonal")) {
    const Vector d = cfg::complex_vector(sys.at("diagonal"), "system.diagonal");
    h_r = Matrix::Zero(d.size(), d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (std::abs(d(i).imag()) > 0.0)
        throw ConfigError("config: system.diagonal entries must be real");
      h_r(i, i) = d(i).real();
    }
  } else if (sys.contains("dense")) {
    h_r = cfg::complex_matrix(sys.at("dense"), "system.dense");
    if (hermiticity_error(h_r) > tol.alg)
      throw ConfigError("config: system.dense must be Hermitian");
  } else {
    throw ConfigError("config: 'system' needs 'diagonal' or 'dense'");
  }
  try {
    return compose(clock_grid, make_operator(std::move(h_r), kHermitian, tol), hbar, tol);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline WeylModel weyl_model_from_config(const Json& j, double hbar) {
  WeylModel model;
  model.z_grid = cfg::grid(cfg::require(j, "z_grid"), "z_grid");
  const std::string chi = cfg::require(j, "chirality").get<std::string>();
  if (chi == "+")
    model.chirality = Chirality::kPlus;
  else if (chi == "-")
    model.chirality = Chirality::kMinus;
  else
    throw ConfigError("config: 'chirality' must be \"+\" or \"-\"");
  model.c = cfg::number_or(j, "c", 1.0);
  model.hbar = hbar;
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return model;
}

namespace detail {

inline void run_measure(const Json& j, double hbar, const Tolerances& tol, RunReport& report) {
  const MeasurementModel model = measurement_model_from_config(j, hbar);
  const bool allow_wrap = cfg::flag_or(j, "allow_wrap", false);

  // precondition: every pointer shift is a whole number of grid steps
  for (const auto& b : model.spectrum) {
    const double steps =
        model.coupling * model.duration * b.eigenvalue / model.pointer_grid.spacing;
    if (std::abs(steps - std::llround(steps)) > tol.alg)
      throw ConfigError("config: pointer shift for eigenvalue " + std::to_string(b.eigenvalue) +
                        " is not a whole number of grid steps");
  }

  const int n = model.pointer_grid.n_points;
  const int ready = model.ready_index(tol);
  const auto lambdas = model.block_eigenvalues();
  const int m = model.system_dim();

  auto target_index = [&](double lambda) {
    const long long k =
        std::llround(model.coupling * model.duration * lambda / model.pointer_grid.spacing);
    return static_cast<int>((((ready + k) % n) + n) % n);
  };

  double calibration = 0.0;
  for (int a = 0; a < m; ++a) {
    const StateVector out = simulate_measurement(model, basis_state(m, a), allow_wrap, tol);
    const Vector expected =
        kron(basis_state(m, a).amplitudes, basis_state(n, target_index(lambdas[a])).amplitudes);
    calibration = std::max(calibration, (out.amplitudes - expected).norm());
  }
  report.checks.push_back(check_le("calibration_max_residual", calibration, tol.alg));

  {
    Vector sup = Vector::Constant(m, Complex(1.0 / std::sqrt(double(m)), 0.0));
    const StateVector out = simulate_measurement(model, StateVector{sup, false}, allow_wrap, tol);
    Vector expected = Vector::Zero(model.total_dim());
    for (int a = 0; a < m; ++a)
      expected += kron(basis_state(m, a).amplitudes,
                       basis_state(n, target_index(lambdas[a])).amplitudes) /
                  std::sqrt(double(m));
    report.checks.push_back(
        check_le("linearity_residual", (out.amplitudes - expected).norm(), tol.alg));
  }

  std::vector<double> steps;
  if (j.contains("steps")) {
    for (const auto& v : j.at("steps")) steps.push_back(v.get<double>());
  } else {
    for (int k = 0; k <= std::min(n - 1, 8); ++k) {
      const double s = k * model.pointer_grid.spacing / std::abs(model.coupling);
      bool ok = true;
      for (const auto& b : model.spectrum) {
        const double blk = model.coupling * b.eigenvalue * s / model.pointer_grid.spacing;
        if (std::abs(blk - std::llround(blk)) > tol.alg) ok = false;
      }
      if (ok) steps.push_back(s);
    }
  }
  for (double s : steps) {
    HeisenbergCheck hc;
    try {
      hc = heisenberg_translation_check(model, s, tol);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    report.checks.push_back(
        check_le("heisenberg_translation(s=" + format_17g(s) + ")", hc.residual, tol.alg));
  }

  const Operator h = build_interaction_hamiltonian(model, tol);
  const TranslationalCertificate cert = translational_certificate(h, hbar, tol);
  report.certificates["interaction_hamiltonian"] = certificate_to_json(cert);
  if (cfg::flag_or(j, "expect_translational_certificate", false))
    report.checks.push_back(check_flag("interaction_certificate_passes", cert.passes));
}

inline void run_clock(const Json& j, double hbar, const Tolerances& tol, RunReport& report) {
  const CompositeSystem comp = composite_from_config(j, hbar, tol);
  const bool negative_control = cfg::flag_or(j, "negative_control", false);
  const Commensurability com = commensurability(comp, tol);
  report.certificates["commensurability"] = {
      {"max_lattice_residual", com.max_lattice_residual}, {"in_window", com.in_window}};

  if (negative_control) {
    // an off-lattice system spectrum must make the constraint fail loudly
    report.checks.push_back(
        check_ge("incommensurability_residual", com.max_lattice_residual, tol.spec));
  } else {
    if (com.max_lattice_residual > tol.spec)
      throw ConfigError("config: system spectrum incommensurate with the clock lattice, residual " +
                        std::to_string(com.max_lattice_residual));
    if (!com.in_window)
      throw ConfigError("config: system energy aliases outside the clock window");
  }

  std::vector<StateVector> basis;
  for (int b = 0; b < comp.system_dim(); ++b) basis.push_back(basis_state(comp.system_dim(), b));
  const GramCheck gram = history_gram_check(comp, basis, tol);
  report.checks.push_back(check_le("history_gram_offdiag", gram.max_offdiag, tol.alg));
  report.checks.push_back(check_le("history_gram_diag_deviation", gram.max_diag_deviation, tol.alg));
  report.certificates["history_count"] = gram.vector_count;

  if (!negative_control) {
    const TranslationalCertificate cert = theorem2_certificate(comp, tol);
    report.certificates["theorem2"] = certificate_to_json(cert);
    report.checks.push_back(
        check_flag("theorem2_passes_with_system_multiplicity",
                   cert.passes && cert.multiplicity == comp.system_dim()));
  }

  // default history seed: uniform superposition, so every system level enters
  StateVector psi0 =
      j.contains("psi0")
          ? make_state(cfg::complex_vector(j.at("psi0"), "psi0"), tol)
          : StateVector{Vector::Constant(comp.system_dim(),
                                         Complex(1.0 / std::sqrt(double(comp.system_dim())))),
                        false};
  if (psi0.dim() != comp.system_dim()) throw ConfigError("config: psi0 dimension mismatch");
  const PageWoottersResult pw = page_wootters_state(comp, psi0, tol);
  if (negative_control) {
    report.checks.push_back(
        check_ge("page_wootters_constraint_residual", pw.constraint_residual, 1e-3));
  } else {
    report.checks.push_back(
        check_le("page_wootters_constraint_residual", pw.constraint_residual, tol.alg));
    report.checks.push_back(
        check_le("page_wootters_invariance_residual", pw.invariance_residual, tol.alg));
  }
}

inline void run_weyl(const Json& j, double hbar, const Tolerances& tol, RunReport& report) {
  const WeylModel model = weyl_model_from_config(j, hbar);
  const int n = model.z_grid.n_points;

  report.checks.push_back(check_le("spin_block_commutator", spin_block_commutator(model, tol), 1e-12));

  std::vector<int> shifts;
  if (j.contains("shifts")) {
    for (const auto& v : j.at("shifts")) shifts.push_back(v.get<int>());
  } else {
    for (int k = -n; k <= n; k += std::max(1, n / 8)) shifts.push_back(k);
  }
  for (Spin spin : {Spin::kUp, Spin::kDown}) {
    const char* label = spin == Spin::kUp ? "up" : "down";
    double worst = 0.0;
    for (int k : shifts) {
      if (std::abs(k) > n) throw ConfigError("config: shift |k| must be <= n_points");
      worst = std::max(worst, lightlike_shift_check(model, spin, k, tol).residual);
    }
    report.checks.push_back(
        check_le(std::string("lightlike_shift_max_residual[") + label + "]", worst, tol.alg));

    const TranslationalCertificate cert =
        translational_certificate(weyl_spin_block(model, spin, tol), hbar, tol);
    report.certificates[std::string("spin_block_") + label] = certificate_to_json(cert);
    report.checks.push_back(check_flag(std::string("spin_block_translational_d1[") + label + "]",
                                       cert.passes && cert.multiplicity == 1));
  }
  report.certificates["shift_directions"] = {
      {"up", shift_direction(model.chirality, Spin::kUp)},
      {"down", shift_direction(model.chirality, Spin::kDown)}};
}

inline void run_koopman(const Json& j, double hbar, const Tolerances& tol, RunReport& report) {
  const DynamicalSystem sys = dynamical_system_from_config(j);
  const KoopmanRep rep = koopman_lift(sys, hbar, tol);

  report.checks.push_back(
      check_le("step_unitarity", unitarity_error(rep.step_unitary.mat), 1e-12));
  report.checks.push_back(check_le("exp_consistency", exp_consistency(rep, tol), tol.alg));

  Json orbits = Json::array();
  std::set<int> lengths;
  for (const auto& o : rep.orbit_table) {
    orbits.push_back({{"id", o.id}, {"length", o.length}, {"members", o.members}});
    lengths.insert(o.length);
  }
  report.certificates["orbits"] = orbits;

  report.checks.push_back(check_flag("equal_orbit_lengths", lengths.size() == 1));
  if (lengths.size() == 1) {
    const Theorem3Result t3 = theorem3_certificate(rep, tol);
    report.certificates["theorem3"] = certificate_to_json(t3.cert);
    report.certificates["theorem3"]["basis_preserved"] = t3.basis_preserved;
    report.checks.push_back(check_flag(
        "theorem3_passes_with_orbit_count",
        t3.cert.passes && t3.cert.multiplicity == static_cast<int>(rep.orbit_table.size())));
    report.checks.push_back(check_le("basis_preservation_deviation", t3.max_basis_deviation, tol.alg));
  } else {
    // per-orbit lattices are reported instead of a single certificate
    Json lattices = Json::array();
    for (const auto& o : rep.orbit_table)
      lattices.push_back({{"orbit", o.id}, {"lattice_step", 2.0 * kPi / (o.length * rep.dt)}});
    report.certificates["per_orbit_lattices"] = lattices;
  }

  double max_comm = 0.0;
  std::vector<Operator> observables;
  for (const auto& [name, f] : sys.properties) observables.push_back(observable_operator(rep, f, tol));
  for (std::size_t a = 0; a < observables.size(); ++a)
    for (std::size_t b = a + 1; b < observables.size(); ++b)
      max_comm = std::max(
          max_comm,
          (observables[a].mat * observables[b].mat - observables[b].mat * observables[a].mat).norm());
  if (!observables.empty())
    report.checks.push_back(check_le("observable_commutators", max_comm, 0.0));

  if (j.contains("phase_grid")) {
    const Json& pg = j.at("phase_grid");
    PhaseGrid grid{cfg::grid(cfg::require(pg, "q"), "phase_grid.q"),
                   cfg::grid(cfg::require(pg, "p"), "phase_grid.p")};
    if (grid.total() != rep.dim)
      throw ConfigError("config: phase_grid does not factor the state set");
    const double amount = cfg::number_or(j, "shift_amount", grid.q.spacing);
    const CcrDichotomyReport ccr = ccr_dichotomy_report(rep, grid, amount, tol);
    report.checks.push_back(
        check_le("phase_space_commutator", ccr.position_momentum_commutator, 0.0));
    report.checks.push_back(check_le("weyl_conjugation_residual", ccr.weyl_residual, tol.alg));
    if (grid.q.n_points >= 4)
      report.checks.push_back(check_ge("infinitesimal_ccr_defect", ccr.infinitesimal_defect, 0.1));
    report.checks.push_back(check_ge("shift_image_support", ccr.shift_image_support, 2.0));
    report.checks.push_back(check_le("diagonal_image_support", ccr.diagonal_image_support, 1.0));
    report.certificates["ccr_dichotomy"] = {
        {"position_momentum_commutator", ccr.position_momentum_commutator},
        {"weyl_residual", ccr.weyl_residual},
        {"infinitesimal_defect", ccr.infinitesimal_defect},
        {"shift_image_support", ccr.shift_image_support},
        {"diagonal_image_support", ccr.diagonal_image_support}};
  }
}

inline void run_equiv(const Json& j, double hbar, const Tolerances& tol, RunReport& report) {
  const DynamicalSystem left = dynamical_system_from_config(cfg::require(j, "left"));
  const DynamicalSystem right = dynamical_system_from_config(cfg::require(j, "right"));
  const KoopmanRep rep_left = koopman_lift(left, hbar, tol);
  const KoopmanRep rep_right = koopman_lift(right, hbar, tol);

  const int init_left = j.at("left").contains("initial_state") ? cfg::integer(j.at("left"), "initial_state") : 0;
  const int init_right = j.at("right").contains("initial_state") ? cfg::integer(j.at("right"), "initial_state") : 0;
  const QuantumTriple t1 = make_koopman_triple(rep_left, left.properties, init_left, tol);
  const QuantumTriple t2 = make_koopman_triple(rep_right, right.properties, init_right, tol);

  double ta = 0.0, tb = 0.0;
  if (j.contains("anchor_times")) {
    const Json& at = j.at("anchor_times");
    if (!at.is_array() || at.size() != 2) throw ConfigError("config: anchor_times must be [t1, t2]");
    ta = at[0].get<double>();
    tb = at[1].get<double>();
  }
  const int max_word_len = j.contains("max_word_len") ? cfg::integer(j, "max_word_len") : 4;

  IntertwinerResult iw;
  try {
    iw = build_intertwiner(t1, t2, ta, tb, tol);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  report.checks.push_back(check_le("intertwiner_unitarity", unitarity_error(iw.matrix.mat), tol.alg));
  report.checks.push_back(check_flag("trajectory_matched", iw.trajectory_matched));

  const InequivalenceCertificate cert = inequivalence_report(t1, t2, iw.matrix, max_word_len, tol, ta, tb);
  report.checks.push_back(check_le("triple_match_residual", cert.triple_match_residual, tol.alg));

  double max_gap = 0.0;
  Json invariants = Json::array();
  for (const auto& inv : cert.invariants) {
    invariants.push_back({{"word", inv.word},
                          {"value_1", inv.value_1},
                          {"value_2", inv.value_2},
                          {"gap", inv.gap}});
    max_gap = std::max(max_gap, inv.gap);
  }
  report.certificates["word_invariants"] = invariants;
  Json distances = Json::object();
  for (const auto& [name, d] : cert.observable_map_distances) distances[name] = d;
  report.certificates["observable_map_distances"] = distances;
  report.certificates["multiplicity"] = multiplicity(t1.hamiltonian, hbar, tol);

  if (cfg::flag_or(j, "expect_inequivalent", true)) {
    const double min_gap = cfg::number_or(j, "min_word_gap", 0.1);
    report.checks.push_back(check_ge("max_word_trace_gap", max_gap, std::max(min_gap, tol.gap)));
  } else {
    report.checks.push_back(check_le("max_word_trace_gap", max_gap, tol.gap));
  }
}

}  // namespace detail

// Builds the experiment's principal Hamiltonian, for spectrum emission.
inline Operator experiment_hamiltonian(const Json& config, double hbar, const Tolerances& tol) {
  const std::string kind = cfg::require(config, "kind").get<std::string>();
  if (kind == "measure")
    return build_interaction_hamiltonian(measurement_model_from_config(config, hbar), tol);
  if (kind == "clock") return composite_from_config(config, hbar, tol).total_hamiltonian;
  if (kind == "weyl") return build_weyl_hamiltonian(weyl_model_from_config(config, hbar), tol);
  if (kind == "koopman")
    return koopman_lift(dynamical_system_from_config(config), hbar, tol).hamiltonian;
  if (kind == "equiv")
    return koopman_lift(dynamical_system_from_config(cfg::require(config, "left")), hbar, tol)
        .hamiltonian;
  throw ConfigError("config: unknown kind '" + kind + "'");
}

// Dispatches one experiment. Verification failures land in the report as
// failed checks; only malformed or precondition-violating configs throw.
inline RunReport run_experiment(const Json& config, const Tolerances& tol = {},
                                std::optional<double> hbar_override = std::nullopt) {
  if (!config.is_object()) throw ConfigError("config: top level must be an object");
  const std::string kind = cfg::require(config, "kind").get<std::string>();
  const double hbar = hbar_override ? *hbar_override : cfg::number_or(config, "hbar", 1.0);
  if (!(hbar > 0.0)) throw ConfigError("config: hbar must be > 0");

  RunReport report;
  report.kind = kind;
  report.input_echo = config;
  report.tolerances = tol;
  report.hbar = hbar;

  const auto start = std::chrono::steady_clock::now();
  if (kind == "measure")
    detail::run_measure(config, hbar, tol, report);
  else if (kind == "clock")
    detail::run_clock(config, hbar, tol, report);
  else if (kind == "weyl")
    detail::run_weyl(config, hbar, tol, report);
  else if (kind == "koopman")
    detail::run_koopman(config, hbar, tol, report);
  else if (kind == "equiv")
    detail::run_equiv(config, hbar, tol, report);
  else
    throw ConfigError("config: unknown kind '" + kind + "'");
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace tqslab
