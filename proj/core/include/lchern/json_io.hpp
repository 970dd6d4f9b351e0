#pragma once

// JSON encodings: matrices, the loop/plot/cylinder generator language,
// tabulated loop files, form-spec dumps and check reports.
//
// Matrix: {"n": 2, "re": [row-major], "im": [row-major]} ("im" optional),
// or {"identity": n}, {"random_ah": {"n", "seed", "scale"}},
// {"random_unitary": {"n", "seed", "scale"}}, {"diag_i": [θ…]} for i·diag(θ).
//
// Generators (every node yields a family with some number of plot
// parameters; loops have none):
//   {"gen": "exp_loop", "k": [..]} or {"gen": "exp_loop", "x": M}, optional "g0": M
//   {"gen": "constant_loop", "g": M}
//   {"gen": "tabulated", "file": path} or {"gen": "tabulated", "samples": [M…]}
//   {"gen": "direct_sum" | "concat" | "product", "a": G, "b": G}
//   {"gen": "inverse", "a": G}
//   {"gen": "wobble", "base": G, "offset": M, "directions": [M…]}
//   {"gen": "translate", "g0": M, "directions": [M…]}
//   {"gen": "sweep", "base": G, "offset": M, "directions": [M…]}
//   {"gen": "concat_s", "a": G, "b": G}

#include <string>
#include <vector>

#include "lchern/chernforms.hpp"
#include "lchern/loopgeom.hpp"
#include "lchern/verifysuite.hpp"

namespace lchern {

struct GeneratedFamily {
  FamilyPtr family;
  int param_dim = 0;
  bool s_dependent = false;
  /// Loop validation tolerance; loosened for tabulated data by its drift.
  double tol = 1e-9;
  double drift = 0.0;
};

std::string matrix_to_json(const CMat& m);
CMat matrix_from_json(const std::string& text);

/// Throws Input on malformed JSON or unknown generators.
GeneratedFamily family_from_json(const std::string& text, const std::string& base_dir = ".");
UnitaryLoop loop_from_json(const std::string& text, const std::string& base_dir = ".");
LoopPlot plot_from_json(const std::string& text, const std::string& base_dir = ".");
CylinderPlot cylinder_from_json(const std::string& text, const std::string& base_dir = ".");

/// {"samples": [M…]} or a bare array of matrices.
std::vector<CMat> read_tabulated_samples(const std::string& path);

/// Throws Input naming the path when the file cannot be read.
std::string read_text_file(const std::string& path);
/// "@path" → file contents, anything else unchanged.
std::string resolve_inline(const std::string& argument);

std::string form_spec_to_json(const FormSpec& spec);
std::string form_value_to_json(const FormValue& value);
std::string check_report_to_json(const CheckReport& report);
std::string suite_result_to_json(const SuiteResult& result);

/// {"suite": name, "quadrature": {...}, "tolerance": x, "checks": [{"name", "kind", ...}]}.
SuiteConfig suite_config_from_json(const std::string& text, const std::string& base_dir = ".");

}  // namespace lchern
