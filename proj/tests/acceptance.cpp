// Acceptance criteria 1-12. `lchern_acceptance N` runs one criterion and
// prints a single PASS/FAIL line; without arguments every criterion runs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "lchern/parallel.hpp"
#include "lchern/verifysuite.hpp"
#include "lchern/json_io.hpp"

using namespace lchern;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double uniform(std::uint64_t seed, std::uint64_t index, double lo, double hi) {
  return lo + (hi - lo) * uniform01(seed, 0xacce, index);
}

CMat ah(std::uint64_t seed, double scale) { return random_anti_hermitian(2, seed, scale); }

// Worst residual/scale over a batch of reports plus the pass count.
struct Tally {
  int total = 0, passed = 0;
  double worst = 0.0;
  void add(const CheckReport& r) {
    ++total;
    passed += r.passed;
    worst = std::max(worst, r.residual / std::max(r.scale, kScaleFloor));
  }
  bool all() const { return total > 0 && passed == total; }
  std::string text() const { return fmt("%d/%d passed, worst residual/scale %.2e", passed, total, worst); }
};

UnitaryLoop random_loop(std::uint64_t seed) {
  const int k0 = static_cast<int>(std::floor(uniform(seed, 0, -1.0, 2.0)));
  const int k1 = static_cast<int>(std::floor(uniform(seed, 1, -1.0, 2.0)));
  // k = (0, 0) gives a null-homotopic loop with vanishing scale
  const std::vector<int> k{k0 == 0 && k1 == 0 ? 1 : k0, k1};
  const UnitaryLoop base = exp_loop(winding_generator(k), random_unitary(2, seed * 7 + 1));
  return UnitaryLoop(wobble_family(base, ah(seed * 7 + 2, 0.4), {}));
}

std::vector<double> random_point(std::uint64_t seed, int dim) {
  std::vector<double> p(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) p[static_cast<std::size_t>(i)] = uniform(seed, 100 + i, -0.3, 0.3);
  return p;
}

FamilyPtr map_plot(std::uint64_t seed, int dim) {
  std::vector<CMat> dirs;
  for (int i = 0; i < dim; ++i) dirs.push_back(ah(seed * 11 + i + 1, 0.4));
  return translate_family(random_unitary(2, seed * 11), dirs);
}

// --- 1 ----------------------------------------------------------------------

Outcome holonomy_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  // fine enough that the quadrature floor sits near 1e-10, so truncation is what is measured
  QuadratureSpec q;
  q.grid_t = 1024;
  double worst = 0.0, worst_bound = 0.0;
  int needed = 12;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const LineConnection in = random_line_connection(2, seed, 3.0);
    const Complex ode = trace(path_ordered_exp(in.contraction, 4000));
    const FormValue f = tr_hol_even(in.base, in.connection, 0, {}, 12, q);
    const double rel = std::abs(f.value - ode) / std::abs(ode);
    worst = std::max(worst, rel);
    worst_bound = std::max(worst_bound, f.tail_bound / std::abs(ode));
    int n = 12;
    while (n < 60 && std::abs(tr_hol_even(in.base, in.connection, 0, {}, n, q).value - ode) > 1e-8 * std::abs(ode)) ++n;
    needed = std::max(needed, n);
  }
  const double elapsed = seconds_since(t0);
  Outcome o;
  o.pass = worst <= 1e-8 && elapsed < 10.0;
  o.detail = fmt("20 U(2) connections, sup|iA| = 3, grid_t 1024, nMax 12: worst relative error %.2e (tail bound %.2e); "
                 "1e-8 first reached at nMax %d; %.1f s",
                 worst, worst_bound, needed, elapsed);
  return o;
}

// --- 2 ----------------------------------------------------------------------

Outcome beta_identity() {
  const int m = 1024;
  const auto w = rule_weights(m, QuadratureRule::Simpson);
  double worst = 0.0;
  for (int k = 0; k <= 6; ++k)
    for (int l = 0; l <= 6; ++l) {
      double acc = 0.0;
      for (int i = 0; i <= m; ++i) {
        const double s = static_cast<double>(i) / m;
        acc += w[static_cast<std::size_t>(i)] * std::pow(s, k) * std::pow(1.0 - s, l);
      }
      const double exact = std::tgamma(k + 1.0) * std::tgamma(l + 1.0) / std::tgamma(k + l + 2.0);
      worst = std::max(worst, std::abs(acc - exact));
    }
  return {worst <= 1e-10, fmt("k,l <= 6 on the Simpson s-grid (%d intervals): worst error %.2e", m, worst)};
}

// --- 3 ----------------------------------------------------------------------

Outcome gauge_cs() {
  CheckOptions o;
  o.tolerance = 1e-6;
  Tally t;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const LoopPlot plot(map_plot(seed, 3), 3);
    const auto p = random_point(seed, 3);
    t.add(check_gauge_cs(plot, 1, p, o));
    t.add(check_gauge_cs(plot, 3, p, o));
  }
  return {t.all(), "degrees 1 and 3 on 10 map-plots: " + t.text()};
}

// --- 4 ----------------------------------------------------------------------

Outcome route() {
  Tally t;
  double deg3_time = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const UnitaryLoop g = random_loop(seed);
    // the s-grid dominates the error in both routes; the t-grid is cheap to keep coarse
    CheckOptions o;
    o.tolerance = 1e-6;
    o.quad.grid_t = 64;
    o.quad.grid_s = 32;
    t.add(check_route(g, random_fourier_fields(g, 1, seed), o));
    const auto t0 = std::chrono::steady_clock::now();
    t.add(check_route(g, random_fourier_fields(g, 3, seed + 100), o));
    deg3_time += seconds_since(t0);
  }
  return {t.all() && deg3_time < 120.0,
          "degrees 1 and 3 on 10 loops (grid_t 64, grid_s 32): " + t.text() + fmt("; degree 3 took %.1f s", deg3_time)};
}

// --- 5 ----------------------------------------------------------------------

Outcome closure() {
  Tally zero, two;
  CheckOptions o;
  o.tolerance = 1e-7;
  for (int k : {1, -2, 3}) {
    const std::vector<int> kk{k};
    zero.add(check_closure(LoopPlot(exp_loop(winding_generator(kk), random_unitary(1, 40 + k)).family(), 0), 0, {}, o));
  }
  for (std::uint64_t seed = 1; seed <= 4; ++seed)
    zero.add(check_closure(LoopPlot(random_loop(seed).family(), 0), 0, {}, o));
  o.tolerance = 1e-3;
  o.h = 1e-3;
  o.min_order = 1.8;
  o.quad.grid_t = 512;
  int measured = 0;
  double min_order = 1e9;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const LoopPlot plot(wobble_family(random_loop(seed), ah(seed + 60, 1.0), {ah(seed + 61, 1.0), ah(seed + 62, 1.0)}), 2);
    const CheckReport r = check_closure(plot, 2, std::vector<double>{0.1, -0.1}, o);
    two.add(r);
    if (r.observed_order) {
      ++measured;
      min_order = std::min(min_order, *r.observed_order);
    }
  }
  // every measured order is gated by the check itself; flat sweeps sit at the
  // quadrature floor and carry no order
  return {zero.all() && two.all() && measured >= 3,
          "degree 0 (U(1), U(2)): " + zero.text() + "; degree 2: " + two.text() +
              fmt(", FD order measured on %d/10 plots, min %.2f", measured, measured ? min_order : 0.0)};
}

// --- 6 ----------------------------------------------------------------------

Outcome restriction() {
  CheckOptions o;
  o.tolerance = 1e-6;
  o.quad.grid_s = 16;
  Tally t;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const LoopPlot plot(map_plot(seed + 20, 3), 3);
    const auto p = random_point(seed, 3);
    t.add(check_restriction(plot, 1, p, o));
    t.add(check_restriction(plot, 3, p, o));
    const CylinderPlot cyl(sweep_family(map_plot(seed + 30, 1), ah(seed + 40, 0.5), {ah(seed + 41, 0.3)}), 1);
    t.add(check_restriction_bcs(cyl, 0, random_point(seed, 1), o));
  }
  return {t.all(), "degrees 1, 3 (BCh vs Ch) and 0 (BCS vs CS): " + t.text()};
}

// --- 7 ----------------------------------------------------------------------

Outcome transgression() {
  Tally stokes, maps;
  CheckOptions o;
  o.quad.grid_s = 16;
  o.h = 1e-3;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    o.tolerance = 1e-4;
    const FamilyPtr base = wobble_family(random_loop(seed), ah(seed + 70, 0.3), {ah(seed + 71, 0.3)});
    const CylinderPlot cyl(sweep_family(base, ah(seed + 72, 0.5), {ah(seed + 73, 0.3)}), 1);
    stokes.add(check_transgression(cyl, 1, random_point(seed, 1), o));
    o.tolerance = 1e-6;
    const CylinderPlot mc(sweep_family(map_plot(seed + 80, 1), ah(seed + 74, 0.5), {ah(seed + 75, 0.3)}), 1);
    maps.add(check_map_transgression(mc, 1, random_point(seed, 1), o));
  }
  return {stokes.all() && maps.all(), "degree 0->1 on cylinders: " + stokes.text() + "; dCS on map-cylinders: " + maps.text()};
}

// --- 8 ----------------------------------------------------------------------

Outcome additivity() {
  Tally sum, cat, inv;
  CheckOptions o;
  o.quad.grid_t = 128;
  o.quad.grid_s = 16;
  for (std::uint64_t seed = 1; seed <= 2; ++seed) {
    o.tolerance = 1e-9;
    const FamilyPtr a = wobble_family(random_loop(seed), ah(seed + 90, 0.3), {ah(seed + 91, 0.3)});
    const FamilyPtr b = wobble_family(random_loop(seed + 10), ah(seed + 92, 0.3), {ah(seed + 93, 0.3)});
    const auto p = random_point(seed, 1);
    sum.add(check_additivity(AdditivityMode::DirectSum, a, b, 1, 1, p, o));
    const FamilyPtr ca = sweep_family(a, ah(seed + 94, 0.4), {});
    const FamilyPtr cb = sweep_family(b, ah(seed + 95, 0.4), {});
    sum.add(check_additivity(AdditivityMode::DirectSum, ca, cb, 1, 0, p, o));

    o.tolerance = 1e-7;
    const CMat y = ah(seed + 94, 0.4);
    const FamilyPtr next = sweep_family(product_family(a, constant_family(expm(y))), ah(seed + 96, 0.4), {});
    cat.add(check_additivity(AdditivityMode::Concat, ca, next, 1, 0, p, o));

    o.tolerance = 1e-9;
    const FamilyPtr m = map_plot(seed + 100, 2);
    const auto p2 = random_point(seed, 2);
    inv.add(check_additivity(AdditivityMode::Inverse, m, nullptr, 2, 1, p2, o));
    const FamilyPtr mc = sweep_family(map_plot(seed + 110, 2), ah(seed + 97, 0.5), {ah(seed + 98, 0.3), ah(seed + 99, 0.3)});
    inv.add(check_additivity(AdditivityMode::Inverse, mc, nullptr, 2, 2, p2, o));
  }
  return {sum.all() && cat.all() && inv.all(),
          "direct sum: " + sum.text() + "; concat: " + cat.text() + "; inverse: " + inv.text()};
}

// --- 9 ----------------------------------------------------------------------

Outcome winding() {
  CheckOptions o;
  o.tolerance = 1e-8;
  auto k = [](std::vector<int> v, std::uint64_t seed) {
    return exp_loop(winding_generator(v), seed ? random_unitary(static_cast<int>(v.size()), seed) : identity(static_cast<int>(v.size())));
  };
  struct Case {
    UnitaryLoop loop;
    long long expected;
  };
  const UnitaryLoop w = random_loop(3);
  const long long ww = winding_number(w, o.quad).rounded;
  const std::vector<Case> cases{
      {k({1}, 0), 1},
      {k({-3}, 0), -3},
      {k({2, -1}, 5), 1},
      {k({1, 1, 1}, 6), 3},
      {UnitaryLoop(wobble_family(k({2, 0}, 7), ah(8, 0.6), {})), 2},
      {direct_sum(k({1, 2}, 9), k({-4}, 0)), -1},
      {concat(k({1}, 0), k({2}, 0)), 3},
      {concat(k({1, -1}, 0), k({0, 2}, 0)), 2},
      {inverse(k({2, 3}, 10)), -5},
      {product(k({1, 0}, 0), direct_sum(k({1}, 0), k({-3}, 0))), -1},
      {direct_sum(w, concat(k({1}, 0), k({1}, 0))), ww + 2},
  };
  Tally t;
  for (const Case& c : cases) t.add(check_winding(c.loop, c.expected, o));
  return {t.all(), fmt("%zu loops incl. concatenations and block sums: ", cases.size()) + t.text()};
}

// --- 10 ---------------------------------------------------------------------

Outcome tensor() {
  CheckOptions o;
  o.tolerance = 1e-8;
  Tally t;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Curve base(lambda_family(
        2, 1,
        [](const Coords& c) {
          CMat x(2, 1);
          x << std::cos(2 * kPi * c.t), std::sin(2 * kPi * c.t);
          return x;
        },
        [](const Coords& c, int v) {
          CMat x = CMat::Zero(2, 1);
          if (v == kVarT) x << -2 * kPi * std::sin(2 * kPi * c.t), 2 * kPi * std::cos(2 * kPi * c.t);
          return x;
        }));
    auto vec = [seed](int i) {
      return std::vector<double>{uniform(seed, 200 + 2 * i, -0.5, 0.5), uniform(seed, 201 + 2 * i, -0.5, 0.5)};
    };
    const ConnectionData c1 = abelian_connection(base, vec(0), vec(1), vec(2));
    const ConnectionData c2 = abelian_connection(base, vec(3), vec(4), vec(5));
    CMat v(2, 1), w(2, 1);
    v << uniform(seed, 300, -1, 1), uniform(seed, 301, -1, 1);
    w << uniform(seed, 302, -1, 1), uniform(seed, 303, -1, 1);
    const std::vector<TangentField> vw{constant_field(base, v), constant_field(base, w)};
    t.add(check_tensor(base, c1, c2, vw, o));
  }
  return {t.all(), "degrees 0 and 2 on 5 abelian pairs: " + t.text()};
}

// --- 11 ---------------------------------------------------------------------

// f evaluated on vectors selected by `order` and scaled by `lambda` in slot
// `slot`; returns (value, scale).
using Evaluator = std::function<FormValue(const std::vector<int>& order, int slot, Complex lambda)>;

struct Alternation {
  int tests = 0;
  double worst = 0.0;
};

Alternation alternation(const Evaluator& f, int arity, std::uint64_t seed) {
  Alternation a;
  std::vector<int> id(static_cast<std::size_t>(arity));
  for (int i = 0; i < arity; ++i) id[static_cast<std::size_t>(i)] = i;
  const FormValue base = f(id, -1, 1.0);
  const double scale = std::max(base.scale, kScaleFloor);
  for (int test = 0; test < 200; ++test) {
    const auto u = static_cast<std::uint64_t>(test);
    if (test % 2 == 0 && arity >= 2) {
      std::vector<int> order = id;
      const int i = static_cast<int>(uniform01(seed, u, 0) * arity) % arity;
      const int j = (i + 1 + static_cast<int>(uniform01(seed, u, 1) * (arity - 1))) % arity;
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
      a.worst = std::max(a.worst, std::abs(f(order, -1, 1.0).value + base.value) / scale);
    } else {
      const Complex lambda(uniform(seed, 4 * u + 2, -2, 2), uniform(seed, 4 * u + 3, -2, 2));
      const int slot = static_cast<int>(uniform01(seed, u, 5) * arity) % arity;
      a.worst = std::max(a.worst, std::abs(f(id, slot, lambda).value - lambda * base.value) / (std::abs(lambda) * scale));
    }
    ++a.tests;
  }
  return a;
}

template <class Field>
std::vector<Field> pick(const std::vector<Field>& all, const std::vector<int>& order, int slot, Complex lambda) {
  std::vector<Field> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& v = all[static_cast<std::size_t>(order[i])];
    out.push_back(static_cast<int>(i) == slot ? scaled_field(v, lambda) : v);
  }
  return out;
}

Outcome alternation_all() {
  QuadratureSpec q;
  q.grid_t = 16;
  q.grid_s = 4;
  const UnitaryLoop g = random_loop(5);
  const auto f3 = random_fourier_fields(g, 3, 21);
  const ConnectionPath path = gauge_path_connection(g);
  const ConnectionData conn = path.at(0.3);
  const CMat g0 = random_unitary(2, 22);
  std::vector<CMat> pt;
  for (std::uint64_t s = 23; s < 26; ++s) pt.push_back(g0 * ah(s, 0.5));
  const CylinderPlot cplot(sweep_family(wobble_family(g, ah(26, 0.3), {ah(27, 0.3), ah(28, 0.3)}), ah(29, 0.4),
                                        {ah(30, 0.3), ah(31, 0.3)}),
                           2);
  const std::vector<double> cp{0.1, -0.1};
  const CylinderMap cyl = cplot.at(cp);
  const std::vector<CylinderField> cf{cplot.partial(cp, 0), cplot.partial(cp, 1)};
  const Curve path_curve(map_plot(32, 0));
  const LoopPlot mplot(translate_family(g0, {ah(33, 0.4), ah(34, 0.4)}), 2);
  // Path of maps t ↦ g₀·exp(tY) with plot directions as fields.
  const CylinderPlot mcyl(sweep_family(map_plot(35, 2), ah(36, 0.5), {ah(37, 0.3), ah(38, 0.3)}), 2);
  const CylinderMap mc = mcyl.at(cp);
  const std::vector<CylinderField> mf{mcyl.partial(cp, 0), mcyl.partial(cp, 1)};

  struct Named {
    const char* name;
    int arity;
    Evaluator f;
  };
  const std::vector<Named> forms{
      {"ch-odd", 3,
       [&](const std::vector<int>& o, int slot, Complex l) {
         std::vector<CMat> v;
         for (std::size_t i = 0; i < o.size(); ++i)
           v.push_back(static_cast<int>(i) == slot ? CMat(l * pt[static_cast<std::size_t>(o[i])])
                                                   : pt[static_cast<std::size_t>(o[i])]);
         return ch_odd(g0, v);
       }},
      {"cs-odd", 2, [&](const std::vector<int>& o, int slot, Complex l) { return cs_odd(mc, pick(mf, o, slot, l), q); }},
      {"cs-connection", 3,
       [&](const std::vector<int>& o, int slot, Complex l) { return cs_connection(g, path, pick(f3, o, slot, l), q); }},
      {"tr-hol-even", 2,
       [&](const std::vector<int>& o, int slot, Complex l) {
         return tr_hol_even(g, conn, 1, pick(f3, o, slot, l), 6, q);
       }},
      {"bcs-even", 3,
       [&](const std::vector<int>& o, int slot, Complex l) { return bcs_even(g, path, 1, pick(f3, o, slot, l), 4, q); }},
      {"bch-odd", 3,
       [&](const std::vector<int>& o, int slot, Complex l) { return bch_odd(g, 1, pick(f3, o, slot, l), 5, q); }},
      {"bcs-odd", 2,
       [&](const std::vector<int>& o, int slot, Complex l) { return bcs_odd(cyl, 1, pick(cf, o, slot, l), 5, q); }},
  };
  bool ok = true;
  std::string detail;
  std::uint64_t seed = 1;
  for (const Named& n : forms) {
    const Alternation a = alternation(n.f, n.arity, seed++);
    ok = ok && a.worst <= 1e-12;
    detail += fmt("%s %d tests %.1e; ", n.name, a.tests, a.worst);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

// --- 12 ---------------------------------------------------------------------

Outcome determinism() {
  const char* config = R"({"suite": "determinism", "quadrature": {"grid_t": 64, "grid_s": 8, "mc_samples": 0, "seed": 7},
    "checks": [
      {"name": "closure", "kind": "closure", "degree": 0, "tolerance": 1e-7,
       "plot": {"gen": "wobble", "base": {"gen": "exp_loop", "k": [1, -1]}, "offset": {"random_ah": {"n": 2, "seed": 1, "scale": 0.3}}}},
      {"name": "gauge", "kind": "gauge-cs", "degree": 3, "p": [0.1, 0.2, -0.1],
       "plot": {"gen": "translate", "g0": {"random_unitary": {"n": 2, "seed": 2}},
                "directions": [{"random_ah": {"n": 2, "seed": 3}}, {"random_ah": {"n": 2, "seed": 4}}, {"random_ah": {"n": 2, "seed": 5}}]}},
      {"name": "holonomy", "kind": "holonomy", "seed": 6, "sup_norm": 2.0},
      {"name": "route", "kind": "route", "degree": 1, "fields": {"seed": 8},
       "loop": {"gen": "wobble", "base": {"gen": "exp_loop", "k": [1, 0]}, "offset": {"random_ah": {"n": 2, "seed": 9, "scale": 0.3}}}},
      {"name": "winding", "kind": "winding", "expected": 1, "loop": {"gen": "exp_loop", "k": [2, -1]}},
      {"name": "mc-closure", "kind": "closure", "degree": 0, "mc_samples": 2000, "tolerance": 1e-2,
       "plot": {"gen": "exp_loop", "k": [1, 0]}}
    ]})";
  SuiteConfig cfg = suite_config_from_json(config);
  std::vector<std::string> outputs;
  for (int threads : {1, 4, 8}) {
    set_max_threads(threads);
    outputs.push_back(suite_result_to_json(run_suite(cfg)));
  }
  set_max_threads(1);
  const bool same = outputs[0] == outputs[1] && outputs[1] == outputs[2];
  return {same, fmt("suite JSON at 1, 4 and 8 threads %s (%zu bytes, %zu checks)", same ? "identical" : "differs",
                    outputs[0].size(), cfg.checks.size())};
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list{
      {"HOLONOMY ORACLE", holonomy_oracle}, {"BETA IDENTITY", beta_identity},
      {"GAUGE PATH CH = CS", gauge_cs},          {"ROUTE EQUIVALENCE", route},
      {"CLOSURE", closure},                 {"RESTRICTION", restriction},
      {"TRANSGRESSION", transgression},     {"ADDITIVITY", additivity},
      {"WINDING", winding},                 {"TENSOR", tensor},
      {"ALTERNATION", alternation_all},     {"DETERMINISM", determinism},
  };
  return list;
}

bool run_one(std::size_t i) {
  const Criterion& c = criteria()[i - 1];
  Outcome o;
  try {
    o = c.run();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  std::printf("criterion %02zu %-19s %s  %s\n", i, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
  std::fflush(stdout);
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  set_max_threads(std::max(1, max_threads()));
  if (argc > 1) {
    const long i = std::strtol(argv[1], nullptr, 10);
    if (i < 1 || i > static_cast<long>(criteria().size())) {
      std::fprintf(stderr, "usage: %s [1-%zu]\n", argv[0], criteria().size());
      return 2;
    }
    return run_one(static_cast<std::size_t>(i)) ? 0 : 1;
  }
  bool all = true;
  for (std::size_t i = 1; i <= criteria().size(); ++i) all = run_one(i) && all;
  return all ? 0 : 1;
}
