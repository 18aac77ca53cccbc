#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tqslab/demos.hpp"
#include "tqslab/experiment.hpp"
#include "tqslab/version.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitInputError = 2;

tqslab::Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tqslab::ConfigError("cannot read config file: " + path);
  try {
    return tqslab::Json::parse(in);
  } catch (const tqslab::Json::parse_error& e) {
    throw tqslab::ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
}

void apply_thread_cap() {
  const char* env = std::getenv("TQSLAB_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1)
    throw tqslab::ConfigError("TQSLAB_THREADS must be a positive integer, got '" +
                              std::string(env) + "'");
  tqslab::set_thread_cap(static_cast<int>(v));
}

int finish_run(const tqslab::RunReport& report, const std::string& out_path) {
  for (const auto& c : report.checks)
    std::printf("[%s] %s: %.3e (%s %.3e)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value,
                c.comparator.c_str(), c.tolerance);
  std::printf("%s: %s in %.3f s\n", report.kind.c_str(),
              report.overall_pass() ? "all checks passed" : "verification FAILED",
              report.wall_clock_seconds);
  if (!out_path.empty())
    tqslab::write_text_file(out_path, tqslab::report_to_json(report).dump(2) + "\n");
  return report.overall_pass() ? kExitPass : kExitVerificationFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-scale laboratory for translational quantum dynamics"};
  app.set_version_flag("--version", std::string(tqslab::kToolName) + " " + tqslab::kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<double> opt_tol_alg, opt_tol_spec, opt_hbar;
  std::string out_path;
  app.add_option("--tol-alg", opt_tol_alg, "algebraic residual tolerance (default 1e-10)");
  app.add_option("--tol-spec", opt_tol_spec, "spectral identification tolerance (default 1e-8)");
  app.add_option("--hbar", opt_hbar, "override hbar for the experiment");
  app.add_option("--out", out_path, "write the JSON report to this path");

  std::string run_config_path;
  auto* run_cmd = app.add_subcommand("run", "run one experiment from a JSON config");
  run_cmd->add_option("config", run_config_path, "experiment config (JSON)")->required();

  std::string demo_kind;
  auto* demo_cmd = app.add_subcommand("demo", "run a built-in showcase experiment");
  demo_cmd->add_option("kind", demo_kind, "one of: measure, clock, weyl, koopman, equiv")
      ->required();

  std::string spectrum_config_path, csv_path;
  auto* spectrum_cmd =
      app.add_subcommand("spectrum", "emit the experiment Hamiltonian spectrum as CSV");
  spectrum_cmd->add_option("config", spectrum_config_path, "experiment config (JSON)")->required();
  spectrum_cmd->add_option("--csv", csv_path, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitInputError;
  }

  try {
    apply_thread_cap();

    auto make_tolerances = [&](const tqslab::Json& config) {
      tqslab::Tolerances tol;
      tol.alg = opt_tol_alg ? *opt_tol_alg : tqslab::cfg::number_or(config, "tol_alg", tol.alg);
      tol.spec = opt_tol_spec ? *opt_tol_spec : tqslab::cfg::number_or(config, "tol_spec", tol.spec);
      if (!(tol.alg > 0.0) || !(tol.spec > 0.0))
        throw tqslab::ConfigError("tolerances must be positive");
      return tol;
    };

    if (*run_cmd) {
      const tqslab::Json config = load_config(run_config_path);
      return finish_run(tqslab::run_experiment(config, make_tolerances(config), opt_hbar),
                        out_path);
    }
    if (*demo_cmd) {
      const tqslab::Json config = tqslab::demo_config(demo_kind);
      return finish_run(tqslab::run_experiment(config, make_tolerances(config), opt_hbar),
                        out_path);
    }
    if (*spectrum_cmd) {
      const tqslab::Json config = load_config(spectrum_config_path);
      const tqslab::Tolerances tol = make_tolerances(config);
      const double hbar =
          opt_hbar ? *opt_hbar : tqslab::cfg::number_or(config, "hbar", 1.0);
      const tqslab::Operator h = tqslab::experiment_hamiltonian(config, hbar, tol);
      Eigen::SelfAdjointEigenSolver<tqslab::Matrix> solver(h.mat, Eigen::EigenvaluesOnly);
      if (solver.info() != Eigen::Success)
        throw std::runtime_error("spectrum: eigendecomposition failed");
      tqslab::write_text_file(csv_path, tqslab::spectrum_csv(solver.eigenvalues(), tol.spec));
      std::printf("spectrum: %d eigenvalues written to %s\n", h.dim(), csv_path.c_str());
      return kExitPass;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInputError;
  }
  return kExitInputError;
}
