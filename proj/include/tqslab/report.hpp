#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tqslab/certificate.hpp"
#include "tqslab/core.hpp"
#include "tqslab/version.hpp"

namespace tqslab {

using Json = nlohmann::json;

// One verified quantity: `pass` holds iff `value comparator tolerance`.
struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string comparator = "<=";
};

inline CheckResult check_le(std::string name, double value, double tolerance) {
  return CheckResult{std::move(name), value <= tolerance, value, tolerance, "<="};
}

inline CheckResult check_ge(std::string name, double value, double threshold) {
  return CheckResult{std::move(name), value >= threshold, value, threshold, ">="};
}

inline CheckResult check_flag(std::string name, bool ok) {
  return CheckResult{std::move(name), ok, ok ? 1.0 : 0.0, 1.0, ">="};
}

struct RunReport {
  std::string kind;
  Json input_echo;
  std::vector<CheckResult> checks;
  Json certificates = Json::object();
  Tolerances tolerances;
  double hbar = 1.0;
  double wall_clock_seconds = 0.0;  // console-only; kept out of the canonical file

  bool overall_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

inline Json certificate_to_json(const TranslationalCertificate& cert) {
  Json j;
  j["passes"] = cert.passes;
  j["lattice_step"] = cert.lattice_step;
  j["multiplicity"] = cert.multiplicity;
  j["max_residual"] = cert.max_residual;
  if (!cert.failure_reason.empty()) j["failure_reason"] = cert.failure_reason;
  return j;
}

// Canonical report body. Key order is sorted and floats use the shortest
// round-trip representation, so identical inputs serialize to identical
// bytes. Timing never enters this object.
inline Json report_to_json(const RunReport& report) {
  Json j;
  j["kind"] = report.kind;
  j["input"] = report.input_echo;
  Json checks = Json::array();
  for (const auto& c : report.checks) {
    Json cj;
    cj["name"] = c.name;
    cj["pass"] = c.pass;
    cj["value"] = c.value;
    cj["tolerance"] = c.tolerance;
    cj["comparator"] = c.comparator;
    checks.push_back(cj);
  }
  j["checks"] = checks;
  j["certificates"] = report.certificates;
  j["pass"] = report.overall_pass();
  j["tolerances"] = {{"alg", report.tolerances.alg},
                     {"spec", report.tolerances.spec},
                     {"gap", report.tolerances.gap}};
  j["hbar"] = report.hbar;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  return j;
}

inline std::string format_17g(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// eigenvalue,multiplicity per line; eigenvalues clustered at cluster_tol
inline std::string spectrum_csv(const RealVector& sorted_eigs, double cluster_tol) {
  std::string out = "eigenvalue,multiplicity\n";
  for (const auto& c : cluster_spectrum(sorted_eigs, cluster_tol))
    out += format_17g(c.mean) + "," + std::to_string(c.count) + "\n";
  return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output path: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace tqslab
