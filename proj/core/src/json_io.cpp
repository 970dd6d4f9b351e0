#include "lchern/json_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json_detail.hpp"

namespace lchern {

namespace detail {

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::Input, what + ": malformed JSON: " + e.what());
  }
}

const Json& require(const Json& j, const char* key, const std::string& context) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::Input, context + ": missing \"" + key + "\"");
  return j.at(key);
}

double get_double(const Json& j, const char* key, double fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw Error(ErrorCode::Input, std::string("\"") + key + "\" must be a number");
  return j.at(key).get<double>();
}

int get_int(const Json& j, const char* key, int fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) throw Error(ErrorCode::Input, std::string("\"") + key + "\" must be an integer");
  return j.at(key).get<int>();
}

namespace {

std::vector<double> numbers(const Json& j, const std::string& context) {
  if (!j.is_array()) throw Error(ErrorCode::Input, context + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : j) {
    if (!x.is_number()) throw Error(ErrorCode::Input, context + ": expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::uint64_t get_seed(const Json& j) {
  if (!j.contains("seed")) return 0;
  if (!j.at("seed").is_number_integer()) throw Error(ErrorCode::Input, "\"seed\" must be an integer");
  return j.at("seed").get<std::uint64_t>();
}

}  // namespace

CMat matrix_from(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Input, "matrix: expected an object");
  if (j.contains("identity")) return identity(j.at("identity").get<int>());
  if (j.contains("random_ah") || j.contains("random_unitary")) {
    const bool unitary = j.contains("random_unitary");
    const Json& r = j.at(unitary ? "random_unitary" : "random_ah");
    const int n = get_int(r, "n", 0);
    if (n < 1) throw Error(ErrorCode::Input, "matrix: random matrix needs n ≥ 1");
    const double scale = get_double(r, "scale", 1.0);
    return unitary ? random_unitary(n, get_seed(r), scale) : random_anti_hermitian(n, get_seed(r), scale);
  }
  if (j.contains("diag_i")) {
    const auto theta = numbers(j.at("diag_i"), "diag_i");
    CMat m = CMat::Zero(static_cast<Eigen::Index>(theta.size()), static_cast<Eigen::Index>(theta.size()));
    for (std::size_t i = 0; i < theta.size(); ++i) m(i, i) = Complex(0.0, theta[i]);
    return m;
  }
  const int n = get_int(j, "n", 0);
  if (n < 1) throw Error(ErrorCode::Input, "matrix: \"n\" must be a positive integer");
  const auto re = numbers(require(j, "re", "matrix"), "matrix re");
  const std::size_t nn = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  std::vector<double> im(nn, 0.0);
  if (j.contains("im")) im = numbers(j.at("im"), "matrix im");
  if (re.size() != nn || im.size() != nn)
    throw Error(ErrorCode::Input, "matrix: expected " + std::to_string(nn) + " entries in re/im");
  CMat m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m(r, c) = Complex(re[r * n + c], im[r * n + c]);
  return m;
}

Json matrix_to(const CMat& m) {
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      re.push_back(m(r, c).real());
      im.push_back(m(r, c).imag());
    }
  return Json{{"n", m.rows()}, {"re", re}, {"im", im}};
}

namespace {

std::vector<CMat> matrices(const Json& j, const std::string& context) {
  if (!j.is_array()) throw Error(ErrorCode::Input, context + ": expected an array of matrices");
  std::vector<CMat> out;
  for (const auto& x : j) out.push_back(matrix_from(x));
  return out;
}

std::vector<CMat> samples_from(const Json& j) {
  if (j.is_array()) return matrices(j, "tabulated samples");
  return matrices(require(j, "samples", "tabulated"), "tabulated samples");
}

Coords origin(int param_dim) {
  Coords c;
  c.p.assign(static_cast<std::size_t>(param_dim), 0.0);
  return c;
}

double max_gap(const Family& a, const Family& b, int param_dim, int var) {
  double worst = 0.0;
  for (int i = 0; i <= 8; ++i) {
    Coords ca = origin(param_dim), cb = origin(param_dim);
    const double u = i / 8.0;
    if (var == kVarT) {
      ca.t = 1.0, cb.t = 0.0;
      ca.s = cb.s = u;
    } else {
      ca.s = 1.0, cb.s = 0.0;
      ca.t = cb.t = u;
    }
    worst = std::max(worst, (a.value(ca) - b.value(cb)).cwiseAbs().maxCoeff());
    if (var == kVarT) break;
  }
  return worst;
}

}  // namespace

GeneratedFamily family_from(const Json& j, const std::string& base_dir) {
  const std::string gen = require(j, "gen", "generator").get<std::string>();
  GeneratedFamily out;
  auto sub = [&](const char* key) { return family_from(require(j, key, gen), base_dir); };
  auto merge = [&](const GeneratedFamily& a, const GeneratedFamily& b) {
    out.param_dim = std::max(a.param_dim, b.param_dim);
    out.s_dependent = a.s_dependent || b.s_dependent;
    out.tol = std::max(a.tol, b.tol);
    out.drift = std::max(a.drift, b.drift);
  };
  auto same_dim = [&](const GeneratedFamily& a, const GeneratedFamily& b) {
    if (a.family->rows() != b.family->rows())
      throw Error(ErrorCode::Dimension, gen + ": operands live in different U(n)");
  };
  auto directions = [&]() { return j.contains("directions") ? matrices(j.at("directions"), gen) : std::vector<CMat>{}; };
  auto offset = [&](Eigen::Index n) {
    if (!j.contains("offset")) return CMat(CMat::Zero(n, n));
    CMat y = matrix_from(j.at("offset"));
    if (y.rows() != n) throw Error(ErrorCode::Dimension, gen + ": offset has the wrong size");
    return y;
  };

  if (gen == "exp_loop") {
    CMat x;
    if (j.contains("k")) {
      const auto k = j.at("k").get<std::vector<int>>();
      x = winding_generator(k);
    } else {
      x = matrix_from(require(j, "x", gen));
    }
    const UnitaryLoop loop = j.contains("g0") ? exp_loop(x, matrix_from(j.at("g0"))) : exp_loop(x);
    out.family = loop.family();
  } else if (gen == "constant_loop") {
    out.family = constant_loop(matrix_from(require(j, "g", gen))).family();
  } else if (gen == "tabulated") {
    std::vector<CMat> samples;
    if (j.contains("file")) {
      std::filesystem::path path = j.at("file").get<std::string>();
      if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
      samples = read_tabulated_samples(path.string());
    } else {
      samples = samples_from(j);
    }
    const TabulatedLoop tab = tabulated_loop(samples);
    double defect = 0.0;
    for (const CMat& g : samples) defect = std::max(defect, unitarity_defect(g));
    out.family = tab.loop.family();
    out.drift = tab.unitarity_drift;
    out.tol = std::max(1e-9, 2.0 * (tab.unitarity_drift + defect));
  } else if (gen == "direct_sum" || gen == "product" || gen == "concat" || gen == "concat_s") {
    const GeneratedFamily a = sub("a"), b = sub("b");
    merge(a, b);
    if (gen == "direct_sum") {
      out.family = block_diag_family(a.family, b.family);
    } else {
      same_dim(a, b);
      if (gen == "product") {
        out.family = product_family(a.family, b.family);
      } else {
        const int var = gen == "concat" ? kVarT : kVarS;
        const double gap = max_gap(*a.family, *b.family, out.param_dim, var);
        if (gap > 1e-9) throw Error(ErrorCode::EndpointMismatch, gen + ": endpoint mismatch " + std::to_string(gap));
        out.family = concat_family(a.family, b.family, var);
        if (var == kVarS) out.s_dependent = true;
      }
    }
  } else if (gen == "inverse") {
    const GeneratedFamily a = sub("a");
    merge(a, a);
    out.family = inverse_family(a.family);
  } else if (gen == "wobble") {
    const GeneratedFamily base = sub("base");
    if (base.param_dim != 0 || base.s_dependent) throw Error(ErrorCode::Input, "wobble: base must be a loop");
    const auto dirs = directions();
    out.family = wobble_family(Curve(base.family), offset(base.family->rows()), dirs);
    out.param_dim = static_cast<int>(dirs.size());
    out.tol = base.tol;
    out.drift = base.drift;
  } else if (gen == "translate") {
    const CMat g0 = matrix_from(require(j, "g0", gen));
    if (!is_unitary(g0)) throw Error(ErrorCode::NonUnitary, "translate: g0 is not unitary");
    const auto dirs = directions();
    out.family = translate_family(g0, dirs);
    out.param_dim = static_cast<int>(dirs.size());
  } else if (gen == "sweep") {
    const GeneratedFamily base = sub("base");
    const auto dirs = directions();
    out.family = sweep_family(base.family, offset(base.family->rows()), dirs);
    out.param_dim = std::max(base.param_dim, static_cast<int>(dirs.size()));
    out.s_dependent = true;
    out.tol = base.tol;
    out.drift = base.drift;
  } else {
    throw Error(ErrorCode::Input, "unknown generator '" + gen + "'");
  }
  return out;
}

Json form_value_to(const FormValue& v) {
  return Json{{"re", v.value.real()}, {"im", v.value.imag()},     {"scale", v.scale},
              {"std_error", v.std_error}, {"tail_bound", v.tail_bound}, {"n_max", v.n_max}};
}

Json report_to(const CheckReport& r) {
  Json conv = Json::array();
  for (const auto& [h, res] : r.convergence) conv.push_back(Json::array({h, res}));
  Json j{{"name", r.name},
         {"kind", r.kind},
         {"digest", r.digest},
         {"residual", r.residual},
         {"scale", r.scale},
         {"tolerance", r.tolerance},
         {"passed", r.passed},
         {"degenerate", r.degenerate},
         {"n_max", r.n_max},
         {"convergence", conv},
         {"min_order", r.min_order},
         {"budget", {{"quadrature", r.budget.quadrature}, {"truncation", r.budget.truncation}, {"fd", r.budget.fd}}},
         {"detail", r.detail}};
  j["observed_order"] = r.observed_order ? Json(*r.observed_order) : Json(nullptr);
  return j;
}

}  // namespace detail

using detail::Json;

namespace {

template <class F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Input, what + ": " + e.what());
  }
}

}  // namespace


CMat matrix_from_json(const std::string& text) {
  return guarded("matrix", [&] { return detail::matrix_from(detail::parse_json(text, "matrix")); });
}

GeneratedFamily family_from_json(const std::string& text, const std::string& base_dir) {
  return guarded("generator", [&] { return detail::family_from(detail::parse_json(text, "generator"), base_dir); });
}

UnitaryLoop loop_from_json(const std::string& text, const std::string& base_dir) {
  const GeneratedFamily g = family_from_json(text, base_dir);
  if (g.param_dim != 0 || g.s_dependent) throw Error(ErrorCode::Input, "loop spec describes a plot or cylinder");
  return UnitaryLoop(g.family, {}, g.tol);
}

LoopPlot plot_from_json(const std::string& text, const std::string& base_dir) {
  const GeneratedFamily g = family_from_json(text, base_dir);
  if (g.s_dependent) throw Error(ErrorCode::Input, "plot spec describes a cylinder");
  return LoopPlot(g.family, g.param_dim, g.tol);
}

CylinderPlot cylinder_from_json(const std::string& text, const std::string& base_dir) {
  const GeneratedFamily g = family_from_json(text, base_dir);
  return CylinderPlot(g.family, g.param_dim, g.tol);
}

std::string matrix_to_json(const CMat& m) { return detail::matrix_to(m).dump(); }

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Input, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string resolve_inline(const std::string& argument) {
  if (!argument.empty() && argument.front() == '@') return read_text_file(argument.substr(1));
  return argument;
}

std::vector<CMat> read_tabulated_samples(const std::string& path) {
  const std::string text = read_text_file(path);
  return guarded(path, [&] { return detail::samples_from(detail::parse_json(text, path)); });
}

std::string form_spec_to_json(const FormSpec& spec) {
  Json terms = Json::array();
  for (const auto& t : spec.terms) {
    Json slots = Json::array();
    for (const Slot& s : t.slots) slots.push_back(Json{{"kind", to_string(s.kind)}, {"degree", s.degree}});
    terms.push_back(Json{{"coeff", Json::array({t.coeff.real(), t.coeff.imag()})},
                         {"slots", slots},
                         {"s_integrated", t.s_integrated},
                         {"time", t.time == TimeMode::Simplex ? "simplex" : "pointwise"}});
  }
  return Json{{"form", to_string(spec.name)},
              {"degree", spec.degree},
              {"n_max", spec.n_max},
              {"term_count", spec.terms.size()},
              {"terms", terms}}
      .dump(2);
}

std::string form_value_to_json(const FormValue& value) { return detail::form_value_to(value).dump(2); }

std::string check_report_to_json(const CheckReport& report) { return detail::report_to(report).dump(2); }

std::string suite_result_to_json(const SuiteResult& result) {
  Json checks = Json::array();
  for (const auto& r : result.reports) checks.push_back(detail::report_to(r));
  Json config = detail::parse_json(result.config_json, "suite config");
  return Json{{"suite", result.name},
              {"config", config},
              {"checks", checks},
              {"summary", {{"passed", result.passed}, {"failed", result.failed}}}}
      .dump(2);
}

SuiteConfig suite_config_from_json(const std::string& text, const std::string& base_dir) {
  return guarded("suite config", [&] {
  const Json j = detail::parse_json(text, "suite config");
  if (!j.is_object()) throw Error(ErrorCode::Configuration, "suite config must be an object");
  SuiteConfig cfg;
  cfg.base_dir = base_dir;
  cfg.config_json = j.dump();
  if (j.contains("suite")) cfg.name = j.at("suite").get<std::string>();
  if (j.contains("quadrature")) {
    const Json& q = j.at("quadrature");
    cfg.quad.grid_t = detail::get_int(q, "grid_t", cfg.quad.grid_t);
    cfg.quad.grid_s = detail::get_int(q, "grid_s", cfg.quad.grid_s);
    cfg.quad.mc_samples = detail::get_int(q, "mc_samples", cfg.quad.mc_samples);
    if (q.contains("rule")) cfg.quad.rule = parse_rule(q.at("rule").get<std::string>());
    if (q.contains("seed")) cfg.quad.seed = q.at("seed").get<std::uint64_t>();
  }
  cfg.quad.validate();
  cfg.default_tolerance = detail::get_double(j, "tolerance", cfg.default_tolerance);
  if (j.contains("checks")) {
    const Json& list = j.at("checks");
    if (!list.is_array()) throw Error(ErrorCode::Configuration, "\"checks\" must be an array");
    for (const auto& c : list) {
      if (!c.is_object()) throw Error(ErrorCode::Configuration, "each check must be a table/object");
      CheckSpec spec;
      spec.kind = detail::require(c, "kind", "check").get<std::string>();
      spec.name = c.contains("name") ? c.at("name").get<std::string>() : spec.kind;
      spec.params_json = c.dump();
      cfg.checks.push_back(std::move(spec));
    }
  }
  return cfg;
  });
}

}  // namespace lchern
