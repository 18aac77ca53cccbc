#pragma once

#include <string>

#include "tqslab/report.hpp"

namespace tqslab {

// Built-in showcase configurations, one per experiment kind.
inline Json demo_config(const std::string& kind) {
  if (kind == "measure") {
    return Json::parse(R"({
      "kind": "measure",
      "spectrum": [{"eigenvalue": 1.0, "degeneracy": 1}, {"eigenvalue": 2.0, "degeneracy": 1}],
      "pointer": {"n_points": 8, "spacing": 1.0, "origin": 0.0},
      "coupling": 1.0,
      "duration": 1.0
    })");
  }
  if (kind == "clock") {
    return Json::parse(R"({
      "kind": "clock",
      "clock": {"n_points": 8, "spacing": 1.0, "origin": 0.0},
      "system": {"diagonal": [0.0, 1.5707963267948966]}
    })");
  }
  if (kind == "weyl") {
    return Json::parse(R"({
      "kind": "weyl",
      "z_grid": {"n_points": 16, "spacing": 1.0, "origin": 0.0},
      "chirality": "+",
      "c": 1.0
    })");
  }
  if (kind == "koopman") {
    return Json::parse(R"({
      "kind": "koopman",
      "states": 6,
      "step": [1, 2, 3, 4, 5, 0],
      "dt": 1.0,
      "properties": {"position": [0, 1, 2, 3, 4, 5]}
    })");
  }
  if (kind == "equiv") {
    return Json::parse(R"({
      "kind": "equiv",
      "left":  {"states": 8, "step": [1, 2, 3, 4, 5, 6, 7, 0], "dt": 1.0,
                "properties": {"f": [0, 1, 2, 3, 4, 5, 6, 7]}, "initial_state": 0},
      "right": {"states": 8, "step": [1, 2, 3, 4, 5, 6, 7, 0], "dt": 1.0,
                "properties": {"f": [0, 1, 4, 1, 0, 1, 4, 1]}, "initial_state": 0},
      "anchor_times": [0.0, 0.0],
      "max_word_len": 4,
      "expect_inequivalent": true,
      "min_word_gap": 0.1
    })");
  }
  throw std::invalid_argument("no demo for kind '" + kind +
                              "' (available: measure, clock, weyl, koopman, equiv)");
}

}  // namespace tqslab
