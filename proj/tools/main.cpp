// lchern: evaluate loop-space forms, run verification checks and suites.
//
//   lchern eval --form bch-odd --degree 1 --plot @plot.json --contract
//   lchern verify --check closure --plot @plot.json --degree 2 --tol 1e-3
//   lchern suite --config configs/default.toml --seed 7 --out report.json
//   lchern dump-form --form bch-odd --degree 1 --nmax 3
//
// Exit status: 0 success / all checks pass, 1 a check failed, 2 usage,
// configuration or input error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <toml.hpp>

#include "lchern/chernforms.hpp"
#include "lchern/json_io.hpp"
#include "lchern/parallel.hpp"
#include "lchern/verifysuite.hpp"

namespace {

using Json = nlohmann::json;
using namespace lchern;

struct RunConfig {
  std::string form;
  int degree = -1;
  int n_max = 0;
  int grid_t = 256;
  int grid_s = 64;
  std::string rule = "simpson";
  int mc_samples = 0;
  std::uint64_t seed = 0;
  std::string loop, cylinder, plot, point, params, check, config, out;
  double tol = -1.0;
  int threads = 0;
  bool contract = false;
  double gauge_s = 0.5;
  bool seed_set = false, grid_t_set = false, grid_s_set = false, rule_set = false, mc_set = false;
};

const char* code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::Dimension: return "Dimension";
    case ErrorCode::Configuration: return "Configuration";
    case ErrorCode::NotALoop: return "NotALoop";
    case ErrorCode::NonUnitary: return "NonUnitary";
    case ErrorCode::EndpointMismatch: return "EndpointMismatch";
    case ErrorCode::Arity: return "Arity";
    case ErrorCode::Parity: return "Parity";
    case ErrorCode::WrongBase: return "WrongBase";
    case ErrorCode::NonProjector: return "NonProjector";
    case ErrorCode::Domain: return "Domain";
    case ErrorCode::Input: return "Input";
  }
  return "Error";
}

void emit(const RunConfig& rc, const std::string& text) {
  if (rc.out.empty()) {
    std::cout << text << '\n';
    return;
  }
  std::ofstream f(rc.out, std::ios::binary);
  if (!f) throw Error(ErrorCode::Input, "cannot write '" + rc.out + "'");
  f << text << '\n';
}

QuadratureSpec quadrature(const RunConfig& rc) {
  QuadratureSpec q;
  q.grid_t = rc.grid_t;
  q.grid_s = rc.grid_s;
  q.rule = parse_rule(rc.rule);
  q.mc_samples = rc.mc_samples;
  q.seed = rc.seed;
  q.validate();
  return q;
}

std::vector<double> parse_point(const std::string& text, int dim) {
  std::vector<double> p;
  if (!text.empty()) {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        p.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw Error(ErrorCode::Configuration, "--point: cannot parse '" + item + "'");
      }
    }
  } else {
    p.assign(static_cast<std::size_t>(dim), 0.0);
  }
  if (static_cast<int>(p.size()) != dim)
    throw Error(ErrorCode::Configuration, "--point has " + std::to_string(p.size()) + " coordinates, the input has " +
                                              std::to_string(dim) + " parameters");
  return p;
}

double contraction_sup(const Curve& c) {
  double sup = 0.0;
  for (int i = 0; i <= 64; ++i) sup = std::max(sup, (c.value(i / 64.0).adjoint() * c.velocity(i / 64.0)).norm());
  return sup;
}

int auto_n_max(const RunConfig& rc, double c, int k) {
  if (rc.n_max > 0) return rc.n_max;
  return suggest_n_max(c, k, 1e-12 * std::max(1.0, std::exp(std::min(c, 600.0))));
}

Json value_json(const std::string& form, int degree, const FormValue& v) {
  return Json{{"form", form},
              {"degree", degree},
              {"n_max", v.n_max},
              {"value", {{"re", v.value.real()}, {"im", v.value.imag()}}},
              {"scale", v.scale},
              {"std_error", v.std_error},
              {"tail_bound", v.tail_bound}};
}

int run_eval(const RunConfig& rc) {
  const QuadratureSpec q = quadrature(rc);
  if (rc.form == "winding") {
    if (rc.loop.empty()) throw Error(ErrorCode::Configuration, "--form winding needs --loop");
    const UnitaryLoop loop = loop_from_json(resolve_inline(rc.loop));
    const WindingResult w = winding_number(loop, q);
    emit(rc, Json{{"form", "winding"},
                  {"raw", {{"re", w.raw.real()}, {"im", w.raw.imag()}}},
                  {"rounded", w.rounded},
                  {"residual", w.residual},
                  {"integral", w.integral}}
                 .dump(2));
    return 0;
  }
  const FormName name = parse_form_name(rc.form);
  const int degree = rc.degree;
  if (degree < 0) throw Error(ErrorCode::Configuration, "--degree is required");
  const int contract = rc.contract ? 1 : 0;
  const int directions = degree - contract;
  if (directions < 0) throw Error(ErrorCode::Arity, "--contract needs degree ≥ 1");

  if (name == FormName::CSOdd || name == FormName::BCSOdd) {
    if (rc.cylinder.empty()) throw Error(ErrorCode::Configuration, "--form " + rc.form + " needs --cylinder");
    const CylinderPlot plot = cylinder_from_json(resolve_inline(rc.cylinder));
    const auto p = parse_point(rc.point, plot.param_dim());
    if (plot.param_dim() < directions) throw Error(ErrorCode::Arity, "cylinder plot has too few parameters");
    const CylinderMap cyl = plot.at(p);
    std::vector<CylinderField> fields;
    if (contract) fields.push_back(cylinder_rotation_field(cyl));
    for (int i = 0; i < directions; ++i) fields.push_back(plot.partial(p, i));
    FormValue v;
    if (name == FormName::CSOdd) {
      v = cs_odd(cyl, fields, q);
    } else {
      double c = 0.0;
      for (int a = 0; a <= 8; ++a) c = std::max(c, contraction_sup(cyl.at(a / 8.0)));
      v = bcs_odd(cyl, degree / 2, fields, auto_n_max(rc, c, degree / 2 + 1), q);
    }
    emit(rc, value_json(to_string(name), degree, v).dump(2));
    return 0;
  }

  if (rc.plot.empty() && rc.loop.empty())
    throw Error(ErrorCode::Configuration, "--form " + rc.form + " needs --plot or --loop");
  const LoopPlot plot = rc.plot.empty() ? LoopPlot(family_from_json(resolve_inline(rc.loop)).family, 0)
                                        : plot_from_json(resolve_inline(rc.plot));
  const auto p = parse_point(rc.point, plot.param_dim());
  if (plot.param_dim() < directions) throw Error(ErrorCode::Arity, "plot has too few parameters for the degree");
  const UnitaryLoop g = plot.at(p);
  std::vector<TangentField> fields;
  if (contract) fields.push_back(rotation_field(g));
  for (int i = 0; i < directions; ++i) fields.push_back(plot.partial(p, i));
  const double c = contraction_sup(g);
  FormValue v;
  switch (name) {
    case FormName::ChOdd: {
      std::vector<CMat> vecs;
      for (const auto& f : fields) vecs.push_back(f(0.0));
      v = ch_odd(g.value(0.0), vecs);
      break;
    }
    case FormName::CSConnection: v = cs_connection(g, gauge_path_connection(g), fields, q); break;
    case FormName::TrHolEven: {
      const int k = degree / 2;
      v = tr_hol_even(g, gauge_path_connection(g).at(rc.gauge_s), k, fields, auto_n_max(rc, c, k), q);
      break;
    }
    case FormName::BCSEven: {
      const int k = (degree - 1) / 2;
      v = bcs_even(g, gauge_path_connection(g), k, fields, auto_n_max(rc, c, k), q);
      break;
    }
    case FormName::BChOdd: {
      const int k = (degree - 1) / 2;
      v = bch_odd(g, k, fields, auto_n_max(rc, c, k), q);
      break;
    }
    default: throw Error(ErrorCode::Configuration, "--form " + rc.form + " needs --cylinder");
  }
  emit(rc, value_json(to_string(name), degree, v).dump(2));
  return 0;
}

SuiteConfig base_config(const RunConfig& rc) {
  SuiteConfig cfg;
  cfg.quad = quadrature(rc);
  if (rc.tol > 0.0) cfg.default_tolerance = rc.tol;
  return cfg;
}

int run_verify(const RunConfig& rc) {
  Json params = rc.params.empty() ? Json::object() : Json::parse(resolve_inline(rc.params));
  if (!params.is_object()) throw Error(ErrorCode::Configuration, "--params must be a JSON object");
  if (!rc.check.empty()) params["kind"] = rc.check;
  if (!params.contains("kind")) throw Error(ErrorCode::Configuration, "verify needs --check or a \"kind\" in --params");
  if (!rc.loop.empty()) params["loop"] = Json::parse(resolve_inline(rc.loop));
  if (!rc.plot.empty()) params["plot"] = Json::parse(resolve_inline(rc.plot));
  if (!rc.cylinder.empty()) params["cylinder"] = Json::parse(resolve_inline(rc.cylinder));
  if (rc.degree >= 0) params["degree"] = rc.degree;
  if (rc.n_max > 0) params["n_max"] = rc.n_max;
  if (rc.tol > 0.0) params["tolerance"] = rc.tol;
  if (!rc.point.empty()) {
    std::vector<double> p;
    std::stringstream ss(rc.point);
    std::string item;
    while (std::getline(ss, item, ',')) p.push_back(std::stod(item));
    params["p"] = p;
  }
  CheckSpec spec;
  spec.kind = params.at("kind").get<std::string>();
  spec.name = params.value("name", spec.kind);
  spec.params_json = params.dump();
  const CheckReport r = run_check(spec, base_config(rc));
  emit(rc, check_report_to_json(r));
  return r.passed ? 0 : 1;
}

Json load_config(const std::string& path) {
  const std::string text = read_text_file(path);
  if (std::filesystem::path(path).extension() == ".json") return Json::parse(text);
  toml::table tbl;
  try {
    tbl = toml::parse(text, path);
  } catch (const toml::parse_error& e) {
    std::ostringstream ss;
    ss << path << ": " << e.description() << " at line " << e.source().begin.line;
    throw Error(ErrorCode::Configuration, ss.str());
  }
  std::ostringstream ss;
  ss << toml::json_formatter{tbl};
  return Json::parse(ss.str());
}

int run_suite_cmd(const RunConfig& rc) {
  if (rc.config.empty()) throw Error(ErrorCode::Configuration, "suite needs --config");
  Json cfg = load_config(rc.config);
  if (!cfg.is_object()) throw Error(ErrorCode::Configuration, "suite config must be a table");
  Json& q = cfg["quadrature"];
  if (!q.is_object()) q = Json::object();
  if (rc.grid_t_set) q["grid_t"] = rc.grid_t;
  if (rc.grid_s_set) q["grid_s"] = rc.grid_s;
  if (rc.rule_set) q["rule"] = rc.rule;
  if (rc.mc_set) q["mc_samples"] = rc.mc_samples;
  if (rc.seed_set) q["seed"] = rc.seed;
  if (rc.tol > 0.0) cfg["tolerance"] = rc.tol;
  const std::string base_dir = std::filesystem::path(rc.config).parent_path().string();
  const SuiteConfig suite = suite_config_from_json(cfg.dump(), base_dir.empty() ? "." : base_dir);
  const SuiteResult result = run_suite(suite);
  emit(rc, suite_result_to_json(result));
  return result.all_passed() ? 0 : 1;
}

int run_dump(const RunConfig& rc) {
  if (rc.degree < 0) throw Error(ErrorCode::Configuration, "--degree is required");
  const FormSpec spec = build_form_spec(parse_form_name(rc.form), rc.degree, rc.n_max > 0 ? rc.n_max : kDefaultNMax);
  emit(rc, form_spec_to_json(spec));
  return 0;
}

void add_common(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--form", rc.form, "Form name (bch-odd, bcs-odd, ch-odd, cs-odd, cs-connection, tr-hol-even, "
                                     "bcs-even, winding)");
  sub->add_option("--degree", rc.degree, "Form degree");
  sub->add_option("--nmax", rc.n_max, "Series truncation (default: chosen from the contraction norm)");
  sub->add_option_function<int>("--grid-t", [&](int v) { rc.grid_t = v, rc.grid_t_set = true; }, "Loop time subintervals");
  sub->add_option_function<int>("--grid-s", [&](int v) { rc.grid_s = v, rc.grid_s_set = true; }, "Path subintervals");
  sub->add_option_function<std::string>("--rule", [&](const std::string& v) { rc.rule = v, rc.rule_set = true; },
                                        "Quadrature rule")
      ->check(CLI::IsMember({"trapezoid", "simpson"}));
  sub->add_option_function<int>("--mc-samples", [&](int v) { rc.mc_samples = v, rc.mc_set = true; },
                                "Monte-Carlo samples per simplex (0 = deterministic)");
  sub->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { rc.seed = v, rc.seed_set = true; },
                                          "Monte-Carlo seed");
  sub->add_option("--loop", rc.loop, "Loop generator JSON or @file");
  sub->add_option("--cylinder", rc.cylinder, "Cylinder (plot) generator JSON or @file");
  sub->add_option("--plot", rc.plot, "Loop plot generator JSON or @file");
  sub->add_option("--point", rc.point, "Plot point, comma separated");
  sub->add_option("--tol", rc.tol, "Tolerance override");
  sub->add_option("--out", rc.out, "Output path (default stdout)");
  sub->add_option("--threads", rc.threads, "Worker cap")->envname("LCHERN_THREADS");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bismut-Chern forms on loop spaces of U(n)"};
  app.require_subcommand(1);
  RunConfig rc;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a form on a loop, plot or cylinder");
  CLI::App* verify = app.add_subcommand("verify", "Run one check");
  CLI::App* suite = app.add_subcommand("suite", "Run a TOML suite");
  CLI::App* dump = app.add_subcommand("dump-form", "Print the slot sequences of a form");
  for (CLI::App* sub : {eval, verify, suite, dump}) add_common(sub, rc);
  eval->add_flag("--contract", rc.contract, "Use γ′ as the first vector");
  eval->add_option("--gauge-s", rc.gauge_s, "Connection d + s·γ⁻¹dγ for tr-hol-even");
  verify->add_option("--check", rc.check, "Check kind");
  verify->add_option("--params", rc.params, "Check parameters JSON or @file");
  suite->add_option("--config", rc.config, "Suite config (.toml or .json)")->required();
  eval->callback([&] {
    if (rc.form.empty()) throw CLI::RequiredError("--form");
  });
  dump->callback([&] {
    if (rc.form.empty()) throw CLI::RequiredError("--form");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (rc.threads > 0) set_max_threads(rc.threads);
    if (eval->parsed()) return run_eval(rc);
    if (verify->parsed()) return run_verify(rc);
    if (suite->parsed()) return run_suite_cmd(rc);
    return run_dump(rc);
  } catch (const Error& e) {
    std::cerr << "lchern: " << e.what() << '\n';
    std::cout << Json{{"error", e.what()}, {"code", code_name(e.code())}}.dump(2) << '\n';
    return 2;
  } catch (const Json::exception& e) {
    std::cerr << "lchern: " << e.what() << '\n';
    std::cout << Json{{"error", e.what()}, {"code", "Input"}}.dump(2) << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "lchern: " << e.what() << '\n';
    std::cout << Json{{"error", e.what()}, {"code", "Error"}}.dump(2) << '\n';
    return 2;
  }
}
