#include "lchern/verifysuite.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "json_detail.hpp"
#include "lchern/parallel.hpp"

namespace lchern {

namespace {

double gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const double u1 = 1.0 - uniform01(seed, stream, 2 * index);
  const double u2 = uniform01(seed, stream, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

std::vector<std::vector<int>> index_tuples(int dim, int size) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (static_cast<int>(cur.size()) == size) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i < dim; ++i) {
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

std::string tuple_text(const std::vector<int>& idx) {
  std::string s = "(";
  for (std::size_t i = 0; i < idx.size(); ++i) s += (i ? "," : "") + std::to_string(idx[i]);
  return s + ")";
}

void require_dim(int have, int want, const char* who) {
  if (have < want)
    throw Error(ErrorCode::Configuration, std::string(who) + ": insufficient parameters (plot has " +
                                              std::to_string(have) + ", need " + std::to_string(want) + ")");
}

void require_point(std::span<const double> p, int dim, const char* who) {
  if (static_cast<int>(p.size()) != dim)
    throw Error(ErrorCode::Dimension, std::string(who) + ": point has " + std::to_string(p.size()) +
                                          " coordinates, plot has " + std::to_string(dim));
}

void require_parity(int degree, int parity, const char* who) {
  if (degree < 0 || degree % 2 != parity)
    throw Error(ErrorCode::Parity, std::string(who) + ": degree " + std::to_string(degree) + " has the wrong parity");
}

double frob(const CMat& m) { return m.norm(); }

double loop_contraction_sup(const Curve& c) {
  double sup = 0.0;
  for (int i = 0; i <= 64; ++i) {
    const double t = i / 64.0;
    sup = std::max(sup, frob(c.value(t).adjoint() * c.velocity(t)));
  }
  return sup;
}

double cylinder_contraction_sup(const CylinderMap& cyl) {
  double sup = 0.0;
  const int vars[1] = {kVarT};
  for (int a = 0; a <= 8; ++a)
    for (int i = 0; i <= 32; ++i) {
      const Jet j = cyl.jet(a / 8.0, i / 32.0, vars);
      sup = std::max(sup, frob(j.value.adjoint() * j.d[0]));
    }
  return sup;
}

double t_velocity_sup(const CylinderMap& cyl) {
  double sup = 0.0;
  const int vars[1] = {kVarT};
  for (int a = 0; a <= 4; ++a)
    for (int i = 0; i <= 8; ++i) sup = std::max(sup, frob(cyl.jet(a / 4.0, i / 8.0, vars).d[0]));
  return sup;
}

void require_constant_loop(const Curve& c, const char* who) {
  double sup = 0.0;
  for (int i = 0; i <= 16; ++i) sup = std::max(sup, frob(c.velocity(i / 16.0)));
  if (sup > 1e-10)
    throw Error(ErrorCode::Domain, std::string(who) + ": plot is not constant-loop (|γ′| = " + std::to_string(sup) + ")");
}

void require_t_constant(const CylinderMap& cyl, const char* who) {
  const double sup = t_velocity_sup(cyl);
  if (sup > 1e-10)
    throw Error(ErrorCode::Domain,
                std::string(who) + ": cylinder is not constant in t (|∂_tΓ| = " + std::to_string(sup) + ")");
}

using Evals = std::vector<FormValue>;

struct AutoResult {
  int n_max = 0;
  Evals values;
};

double max_scale(const Evals& v) {
  double s = 0.0;
  for (const auto& x : v) s = std::max(s, x.scale);
  return s;
}

double total_tail(const Evals& v) {
  double s = 0.0;
  for (const auto& x : v) s += x.tail_bound;
  return s;
}

// Evaluates with a fixed n_max, or grows n_max from an estimate until the
// tail bounds fall below 1% of tolerance·scale.
template <class Eval>
AutoResult with_auto_n(Eval&& eval, double contract_norm, int k, int lowest, const CheckOptions& opt) {
  AutoResult out;
  if (opt.n_max > 0) {
    out.n_max = std::max(opt.n_max, lowest);
    out.values = eval(out.n_max);
    return out;
  }
  // Start from a unit scale; the loop below raises n if the evaluated
  // scale turns out smaller.
  int n = std::max(lowest, suggest_n_max(contract_norm, k, 1e-2 * opt.tolerance));
  for (int attempt = 0;; ++attempt) {
    out.n_max = n;
    out.values = eval(n);
    const double budget = 1e-2 * opt.tolerance * std::max(max_scale(out.values), kScaleFloor);
    if (total_tail(out.values) <= budget || attempt == 4 || n >= 400) break;
    n = std::min(400, n + std::max(4, n / 4));
  }
  return out;
}

QuadratureSpec halved(const QuadratureSpec& q) {
  QuadratureSpec h = q;
  h.grid_t = std::max(8, q.grid_t / 2);
  h.grid_s = std::max(2, q.grid_s / 2);
  if (h.rule == QuadratureRule::Simpson) {
    h.grid_t += h.grid_t % 2;
    h.grid_s += h.grid_s % 2;
  }
  return h;
}

struct Sweep {
  std::vector<double> hs;
  std::vector<Complex> d;
};

Sweep fd_sweep(const PlotComponent& alpha, std::span<const double> p, std::span<const int> idx,
               const CheckOptions& opt) {
  Sweep s;
  double h = opt.h;
  for (int i = 0; i < std::max(1, opt.h_steps); ++i, h *= 0.5) {
    s.hs.push_back(h);
    s.d.push_back(fd_exterior_derivative(alpha, p, idx, h));
  }
  return s;
}

// Order from successive differences of the FD values, which isolates the
// O(h²) error from the fixed quadrature floor of the compared side.
std::optional<double> difference_order(const std::vector<Complex>& d, double noise) {
  if (d.size() < 3) return std::nullopt;
  const double e1 = std::abs(d[0] - d[1]), e2 = std::abs(d[1] - d[2]);
  if (e2 <= noise || e1 <= noise) return std::nullopt;
  return std::log2(e1 / e2);
}

// Accumulates per-tuple results; the report keeps the worst tuple.
struct Worst {
  double residual = -1.0;
  std::vector<std::pair<double, double>> convergence;
  std::optional<double> order;
  bool order_unmeasurable = false;
  double fd = 0.0;
  std::string where;
};

void fill_sweep(Worst& w, const Sweep& s, Complex target, double scale, const std::string& where) {
  std::vector<std::pair<double, double>> conv;
  for (std::size_t i = 0; i < s.d.size(); ++i) conv.emplace_back(s.hs[i], std::abs(s.d[i] - target));
  const double r = conv.front().second;
  if (r <= w.residual) return;
  w.residual = r;
  w.convergence = conv;
  double mag = 0.0;
  for (const auto& x : s.d) mag = std::max(mag, std::abs(x));
  // roundoff of a central difference is about eps·scale/h; differences
  // within a small multiple of that carry no order information
  const double h_min = *std::min_element(s.hs.begin(), s.hs.end());
  const double noise = 8.0 * std::numeric_limits<double>::epsilon() * std::max({1.0, mag, scale}) / h_min;
  w.order = difference_order(s.d, noise);
  w.order_unmeasurable = !w.order && s.d.size() >= 3;
  w.fd = s.d.size() >= 2 ? std::abs(s.d[0] - s.d[1]) : 0.0;
  w.where = where;
}

void apply_worst(CheckReport& r, const Worst& w) {
  r.residual = w.residual;
  r.convergence = w.convergence;
  r.observed_order = w.order;
  r.budget.fd = w.fd;
  if (!w.where.empty()) r.detail = "worst index tuple " + w.where;
  if (w.order_unmeasurable) r.detail += (r.detail.empty() ? "" : "; ") + std::string("FD differences at roundoff");
}

std::vector<TangentField> plot_fields(const LoopPlot& plot, std::span<const double> p, std::span<const int> idx) {
  std::vector<TangentField> out;
  for (int i : idx) out.push_back(plot.partial(p, i));
  return out;
}

std::vector<CylinderField> cyl_fields(const CylinderPlot& plot, std::span<const double> p, std::span<const int> idx) {
  std::vector<CylinderField> out;
  for (int i : idx) out.push_back(plot.partial(p, i));
  return out;
}

std::vector<int> first_indices(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
  return v;
}

CheckReport start(const char* kind, const CheckOptions& opt) {
  CheckReport r;
  r.kind = kind;
  r.name = kind;
  r.tolerance = opt.tolerance;
  r.min_order = opt.min_order;
  return r;
}

}  // namespace

CMat random_anti_hermitian(int n, std::uint64_t seed, double scale) {
  if (n < 1) throw Error(ErrorCode::Dimension, "random_anti_hermitian: n must be positive");
  CMat a(n, n);
  std::uint64_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double re = gaussian(seed, 0x5eed, idx++);
      const double im = gaussian(seed, 0x5eed, idx++);
      a(i, j) = Complex(re, im);
    }
  return 0.5 * scale * (a - a.adjoint());
}

CMat random_unitary(int n, std::uint64_t seed, double scale) { return expm(random_anti_hermitian(n, seed, scale)); }

bool within_tolerance(double residual, double tolerance, double scale) {
  return std::isfinite(residual) && residual <= tolerance * std::max(scale, kScaleFloor);
}

void finalize(CheckReport& r) {
  r.degenerate = !(r.scale >= kDegenerateScale);
  bool ok = within_tolerance(r.residual, r.tolerance, r.scale);
  if (r.min_order > 0.0 && r.observed_order) ok = ok && *r.observed_order >= r.min_order;
  r.passed = ok;
}

// --- closure ----------------------------------------------------------------

CheckReport check_closure(const LoopPlot& plot, int degree, std::span<const double> p, const CheckOptions& opt) {
  require_parity(degree, 0, "check_closure");
  require_point(p, plot.param_dim(), "check_closure");
  require_dim(plot.param_dim(), degree, "check_closure");
  CheckReport r = start("closure", opt);
  const UnitaryLoop g = plot.at(p);
  const TangentField rot = rotation_field(g);
  const int k = degree / 2;
  const double c = loop_contraction_sup(g);
  Worst worst;
  double scale = 0.0, tail = 0.0, quad_budget = 0.0;
  int n_used = 0;
  for (const auto& idx : index_tuples(plot.param_dim(), degree)) {
    std::vector<TangentField> vecs{rot};
    for (auto& f : plot_fields(plot, p, idx)) vecs.push_back(f);
    const AutoResult iota = with_auto_n([&](int n) { return Evals{bch_odd(g, k, vecs, n, opt.quad, opt.max_degree)}; },
                                        c, k, k + 1, opt);
    const FormValue& iv = iota.values[0];
    n_used = std::max(n_used, iota.n_max);
    tail += iv.tail_bound;
    if (opt.quadrature_budget)
      quad_budget = std::max(quad_budget,
                             std::abs(bch_odd(g, k, vecs, iota.n_max, halved(opt.quad), opt.max_degree).value - iv.value));
    if (degree == 0) {
      scale = std::max(scale, iv.scale);
      if (std::abs(iv.value) > worst.residual) worst.residual = std::abs(iv.value);
      continue;
    }
    const int n = iota.n_max;
    PlotComponent alpha = [&, n](std::span<const double> x, std::span<const int> j) {
      const UnitaryLoop gx = plot.at(x);
      return bch_odd(gx, k - 1, plot_fields(plot, x, j), n, opt.quad, opt.max_degree).value;
    };
    const Sweep s = fd_sweep(alpha, p, idx, opt);
    const double sc = std::max(iv.scale, std::abs(s.d.front()));
    scale = std::max(scale, sc);
    fill_sweep(worst, s, -iv.value, sc, tuple_text(idx));
  }
  apply_worst(r, worst);
  r.scale = scale;
  r.n_max = n_used;
  r.budget.truncation = tail;
  r.budget.quadrature = quad_budget;
  finalize(r);
  return r;
}

// --- restriction ------------------------------------------------------------

CheckReport check_restriction(const LoopPlot& plot, int degree, std::span<const double> p, const CheckOptions& opt) {
  require_parity(degree, 1, "check_restriction");
  require_point(p, plot.param_dim(), "check_restriction");
  require_dim(plot.param_dim(), degree, "check_restriction");
  CheckReport r = start("restriction", opt);
  const UnitaryLoop g = plot.at(p);
  require_constant_loop(g, "check_restriction");
  const int k = (degree - 1) / 2;
  const auto fields = plot_fields(plot, p, first_indices(degree));
  std::vector<CMat> vecs;
  for (const auto& f : fields) vecs.push_back(f(0.0));
  // Only words of length k+1 survive on constant loops.
  const int n = opt.n_max > 0 ? std::max(opt.n_max, k + 1) : k + 1;
  const FormValue b = bch_odd(g, k, fields, n, opt.quad, opt.max_degree);
  const FormValue ch = ch_odd(g.value(0.0), vecs, opt.max_degree);
  r.residual = std::abs(b.value - ch.value);
  r.scale = std::max(b.scale, ch.scale);
  r.n_max = n;
  r.budget.truncation = b.tail_bound;
  finalize(r);
  return r;
}

CheckReport check_restriction_bcs(const CylinderPlot& plot, int degree, std::span<const double> p,
                                  const CheckOptions& opt) {
  require_parity(degree, 0, "check_restriction_bcs");
  require_point(p, plot.param_dim(), "check_restriction_bcs");
  require_dim(plot.param_dim(), degree, "check_restriction_bcs");
  CheckReport r = start("restriction-bcs", opt);
  const CylinderMap cyl = plot.at(p);
  require_t_constant(cyl, "check_restriction_bcs");
  const int k = degree / 2;
  const auto fields = cyl_fields(plot, p, first_indices(degree));
  const int n = opt.n_max > 0 ? std::max(opt.n_max, k + 1) : k + 1;
  const FormValue b = bcs_odd(cyl, k, fields, n, opt.quad, opt.max_degree);
  const FormValue cs = cs_odd(cyl, fields, opt.quad, opt.max_degree);
  r.residual = std::abs(b.value - cs.value);
  r.scale = std::max(b.scale, cs.scale);
  r.n_max = n;
  r.budget.truncation = b.tail_bound;
  finalize(r);
  return r;
}

// --- transgression ----------------------------------------------------------

CheckReport check_transgression(const CylinderPlot& plot, int degree, std::span<const double> p,
                                const CheckOptions& opt) {
  require_parity(degree, 1, "check_transgression");
  require_point(p, plot.param_dim(), "check_transgression");
  require_dim(plot.param_dim(), degree, "check_transgression");
  CheckReport r = start("transgression", opt);
  const CylinderMap cyl = plot.at(p);
  const int m = (degree - 1) / 2;
  const double c = cylinder_contraction_sup(cyl);
  const CylinderField rot = cylinder_rotation_field(cyl);
  Worst worst;
  double scale = 0.0, tail = 0.0, quad_budget = 0.0;
  int n_used = 0;
  for (const auto& idx : index_tuples(plot.param_dim(), degree)) {
    const auto fields = cyl_fields(plot, p, idx);
    std::vector<CylinderField> ivecs{rot};
    for (const auto& f : fields) ivecs.push_back(f);
    std::vector<TangentField> e1, e0;
    for (const auto& f : fields) {
      e1.push_back(slice(f, 1.0));
      e0.push_back(slice(f, 0.0));
    }
    const UnitaryLoop g1 = cyl.at(1.0), g0 = cyl.at(0.0);
    auto eval = [&](int n, const QuadratureSpec& q) {
      return Evals{bcs_odd(cyl, m + 1, ivecs, n, q, opt.max_degree), bch_odd(g1, m, e1, n, q, opt.max_degree),
                   bch_odd(g0, m, e0, n, q, opt.max_degree)};
    };
    const AutoResult res = with_auto_n([&](int n) { return eval(n, opt.quad); }, c, m + 1, m + 2, opt);
    const Complex target = res.values[1].value - res.values[2].value - res.values[0].value;
    n_used = std::max(n_used, res.n_max);
    tail += total_tail(res.values);
    if (opt.quadrature_budget) {
      const Evals hv = eval(res.n_max, halved(opt.quad));
      quad_budget = std::max(quad_budget, std::abs(hv[1].value - hv[2].value - hv[0].value - target));
    }
    const int n = res.n_max;
    PlotComponent alpha = [&, n](std::span<const double> x, std::span<const int> j) {
      return bcs_odd(plot.at(x), m, cyl_fields(plot, x, j), n, opt.quad, opt.max_degree).value;
    };
    const Sweep s = fd_sweep(alpha, p, idx, opt);
    const double sc = std::max(max_scale(res.values), std::abs(s.d.front()));
    scale = std::max(scale, sc);
    fill_sweep(worst, s, target, sc, tuple_text(idx));
  }
  apply_worst(r, worst);
  r.scale = scale;
  r.n_max = n_used;
  r.budget.truncation = tail;
  r.budget.quadrature = quad_budget;
  finalize(r);
  return r;
}

CheckReport check_map_transgression(const CylinderPlot& plot, int degree, std::span<const double> p,
                                    const CheckOptions& opt) {
  require_parity(degree, 1, "check_map_transgression");
  require_point(p, plot.param_dim(), "check_map_transgression");
  require_dim(plot.param_dim(), degree, "check_map_transgression");
  CheckReport r = start("map-transgression", opt);
  const CylinderMap cyl = plot.at(p);
  require_t_constant(cyl, "check_map_transgression");
  Worst worst;
  double scale = 0.0;
  for (const auto& idx : index_tuples(plot.param_dim(), degree)) {
    const auto fields = cyl_fields(plot, p, idx);
    std::vector<CMat> v1, v0;
    for (const auto& f : fields) {
      v1.push_back(f(1.0, 0.0));
      v0.push_back(f(0.0, 0.0));
    }
    const FormValue c1 = ch_odd(cyl.value(1.0, 0.0), v1, opt.max_degree);
    const FormValue c0 = ch_odd(cyl.value(0.0, 0.0), v0, opt.max_degree);
    PlotComponent alpha = [&](std::span<const double> x, std::span<const int> j) {
      return cs_odd(plot.at(x), cyl_fields(plot, x, j), opt.quad, opt.max_degree).value;
    };
    const Sweep s = fd_sweep(alpha, p, idx, opt);
    const double sc = std::max({c1.scale, c0.scale, std::abs(s.d.front())});
    scale = std::max(scale, sc);
    fill_sweep(worst, s, c1.value - c0.value, sc, tuple_text(idx));
  }
  apply_worst(r, worst);
  r.scale = scale;
  finalize(r);
  return r;
}

// --- gauge-path identities --------------------------------------------------

CheckReport check_gauge_cs(const LoopPlot& plot, int degree, std::span<const double> p, const CheckOptions& opt) {
  require_parity(degree, 1, "check_gauge_cs");
  require_point(p, plot.param_dim(), "check_gauge_cs");
  require_dim(plot.param_dim(), degree, "check_gauge_cs");
  CheckReport r = start("gauge-cs", opt);
  const UnitaryLoop g = plot.at(p);
  require_constant_loop(g, "check_gauge_cs");
  const auto fields = plot_fields(plot, p, first_indices(degree));
  std::vector<CMat> vecs;
  for (const auto& f : fields) vecs.push_back(f(0.0));
  const FormValue ch = ch_odd(g.value(0.0), vecs, opt.max_degree);
  const FormValue cs = cs_connection(g, gauge_path_connection(g), fields, opt.quad, opt.max_degree);
  r.residual = std::abs(ch.value - cs.value);
  r.scale = std::max(ch.scale, cs.scale);
  finalize(r);
  return r;
}

CheckReport check_route(const LoopPlot& plot, int degree, std::span<const double> p, const CheckOptions& opt) {
  require_parity(degree, 1, "check_route");
  require_point(p, plot.param_dim(), "check_route");
  require_dim(plot.param_dim(), degree, "check_route");
  return check_route(plot.at(p), plot_fields(plot, p, first_indices(degree)), opt);
}

CheckReport check_route(const UnitaryLoop& g, std::span<const TangentField> fields, const CheckOptions& opt) {
  const int degree = static_cast<int>(fields.size());
  require_parity(degree, 1, "check_route");
  CheckReport r = start("route", opt);
  const int k = (degree - 1) / 2;
  const ConnectionPath path = gauge_path_connection(g);
  auto eval = [&](int n, const QuadratureSpec& q) {
    return Evals{bch_odd(g, k, fields, n, q, opt.max_degree), bcs_even(g, path, k, fields, n, q, opt.max_degree)};
  };
  const AutoResult res = with_auto_n([&](int n) { return eval(n, opt.quad); }, loop_contraction_sup(g), k, k + 1, opt);
  r.residual = std::abs(res.values[0].value - res.values[1].value);
  r.scale = max_scale(res.values);
  r.n_max = res.n_max;
  r.budget.truncation = total_tail(res.values);
  if (opt.quadrature_budget) {
    const Evals hv = eval(res.n_max, halved(opt.quad));
    r.budget.quadrature = std::abs(hv[0].value - hv[1].value - res.values[0].value + res.values[1].value);
  }
  finalize(r);
  return r;
}

std::vector<TangentField> random_fourier_fields(const Curve& loop, int count, std::uint64_t seed, int modes,
                                                double scale) {
  const int n = static_cast<int>(loop.rows());
  std::vector<TangentField> out;
  for (int i = 0; i < count; ++i) {
    std::vector<CMat> c, s;
    for (int k = 0; k < modes; ++k) {
      const std::uint64_t base = seed * 7919 + static_cast<std::uint64_t>(i) * 131 + 2 * static_cast<std::uint64_t>(k);
      c.push_back(random_anti_hermitian(n, base, scale / (1.0 + k)));
      s.push_back(random_anti_hermitian(n, base + 1, scale / (1.0 + k)));
    }
    out.push_back(fourier_left_field(loop, std::move(c), std::move(s)));
  }
  return out;
}

// --- additivity -------------------------------------------------------------

std::string to_string(AdditivityMode mode) {
  switch (mode) {
    case AdditivityMode::DirectSum: return "direct_sum";
    case AdditivityMode::Concat: return "concat";
    case AdditivityMode::Inverse: return "inverse";
  }
  return "?";
}

AdditivityMode parse_additivity_mode(const std::string& text) {
  for (AdditivityMode m : {AdditivityMode::DirectSum, AdditivityMode::Concat, AdditivityMode::Inverse})
    if (to_string(m) == text) return m;
  throw Error(ErrorCode::Configuration, "unknown additivity mode '" + text + "'");
}

CheckReport check_additivity(AdditivityMode mode, const FamilyPtr& a, const FamilyPtr& b, int param_dim, int degree,
                             std::span<const double> p, const CheckOptions& opt) {
  if (!a || (mode != AdditivityMode::Inverse && !b)) throw Error(ErrorCode::Input, "check_additivity: missing input");
  if (degree < 0) throw Error(ErrorCode::Parity, "check_additivity: negative degree");
  require_point(p, param_dim, "check_additivity");
  require_dim(param_dim, degree, "check_additivity");
  CheckReport r = start("additivity", opt);
  r.detail = to_string(mode);
  const auto idx = first_indices(degree);
  const bool odd = degree % 2 == 1;
  Complex combined, parts;
  double scale = 0.0;

  if (mode == AdditivityMode::DirectSum) {
    if (odd) {
      const LoopPlot pa(a, param_dim), pb(b, param_dim), ps(block_diag_family(a, b), param_dim);
      const int k = (degree - 1) / 2;
      const UnitaryLoop ga = pa.at(p), gb = pb.at(p), gs = ps.at(p);
      const AutoResult res = with_auto_n(
          [&](int n) {
            return Evals{bch_odd(gs, k, plot_fields(ps, p, idx), n, opt.quad, opt.max_degree),
                         bch_odd(ga, k, plot_fields(pa, p, idx), n, opt.quad, opt.max_degree),
                         bch_odd(gb, k, plot_fields(pb, p, idx), n, opt.quad, opt.max_degree)};
          },
          loop_contraction_sup(gs), k, k + 1, opt);
      combined = res.values[0].value;
      parts = res.values[1].value + res.values[2].value;
      scale = max_scale(res.values);
      r.n_max = res.n_max;
      r.budget.truncation = total_tail(res.values);
    } else {
      const CylinderPlot pa(a, param_dim), pb(b, param_dim), ps(block_diag_family(a, b), param_dim);
      const int k = degree / 2;
      const CylinderMap ca = pa.at(p), cb = pb.at(p), cs = ps.at(p);
      const AutoResult res = with_auto_n(
          [&](int n) {
            return Evals{bcs_odd(cs, k, cyl_fields(ps, p, idx), n, opt.quad, opt.max_degree),
                         bcs_odd(ca, k, cyl_fields(pa, p, idx), n, opt.quad, opt.max_degree),
                         bcs_odd(cb, k, cyl_fields(pb, p, idx), n, opt.quad, opt.max_degree)};
          },
          cylinder_contraction_sup(cs), k, k + 1, opt);
      combined = res.values[0].value;
      parts = res.values[1].value + res.values[2].value;
      scale = max_scale(res.values);
      r.n_max = res.n_max;
      r.budget.truncation = total_tail(res.values);
    }
  } else if (mode == AdditivityMode::Concat) {
    if (odd) throw Error(ErrorCode::Parity, "check_additivity: concat compares BCS in even degree");
    const CylinderPlot pa(a, param_dim), pb(b, param_dim);
    const CylinderMap ca = pa.at(p), cb = pb.at(p);
    double gap = 0.0;
    for (int i = 0; i <= 8; ++i) gap = std::max(gap, (ca.value(1.0, i / 8.0) - cb.value(0.0, i / 8.0)).cwiseAbs().maxCoeff());
    if (gap > 1e-9) throw Error(ErrorCode::EndpointMismatch, "check_additivity: cylinders do not join (" + std::to_string(gap) + ")");
    const CylinderPlot pc(concat_family(a, b, kVarS), param_dim);
    const CylinderMap cc = pc.at(p);
    const int k = degree / 2;
    // The concatenation runs each half through the flat reparametrizer, which
    // needs a finer s-grid than the parts.
    QuadratureSpec qc = opt.quad;
    qc.grid_s *= 4;
    const AutoResult res = with_auto_n(
        [&](int n) {
          return Evals{bcs_odd(cc, k, cyl_fields(pc, p, idx), n, qc, opt.max_degree),
                       bcs_odd(ca, k, cyl_fields(pa, p, idx), n, opt.quad, opt.max_degree),
                       bcs_odd(cb, k, cyl_fields(pb, p, idx), n, opt.quad, opt.max_degree)};
        },
        std::max(cylinder_contraction_sup(ca), cylinder_contraction_sup(cb)), k, k + 1, opt);
    combined = res.values[0].value;
    parts = res.values[1].value + res.values[2].value;
    scale = max_scale(res.values);
    r.n_max = res.n_max;
    r.budget.truncation = total_tail(res.values);
  } else {
    const FamilyPtr inv = inverse_family(a);
    if (odd) {
      Coords at;
      at.p.assign(p.begin(), p.end());
      std::vector<int> vars;
      for (int i : idx) vars.push_back(var_p(i));
      const Jet ja = a->eval(at, vars), ji = inv->eval(at, vars);
      const FormValue fa = ch_odd(ja.value, ja.d, opt.max_degree), fi = ch_odd(ji.value, ji.d, opt.max_degree);
      combined = fi.value;
      parts = -fa.value;
      scale = std::max(fa.scale, fi.scale);
    } else {
      const CylinderPlot pa(a, param_dim), pi(inv, param_dim);
      const FormValue fa = cs_odd(pa.at(p), cyl_fields(pa, p, idx), opt.quad, opt.max_degree);
      const FormValue fi = cs_odd(pi.at(p), cyl_fields(pi, p, idx), opt.quad, opt.max_degree);
      combined = fi.value;
      parts = -fa.value;
      scale = std::max(fa.scale, fi.scale);
    }
  }
  r.residual = std::abs(combined - parts);
  r.scale = scale;
  finalize(r);
  return r;
}

// --- winding ----------------------------------------------------------------

CheckReport check_winding(const UnitaryLoop& loop, long long expected, const CheckOptions& opt) {
  CheckReport r = start("winding", opt);
  const WindingResult w = winding_number(loop, opt.quad);
  const Complex normalized = w.raw / (2.0 * kPi * kI);
  r.residual = std::abs(normalized - Complex(static_cast<double>(expected), 0.0));
  r.scale = 1.0;  // absolute
  std::ostringstream ss;
  ss.precision(17);
  ss << "raw " << w.raw.real() << (w.raw.imag() < 0 ? "-" : "+") << std::abs(w.raw.imag()) << "i, rounded " << w.rounded
     << ", integrality residual " << w.residual;
  r.detail = ss.str();
  finalize(r);
  r.passed = r.passed && w.rounded == expected;
  return r;
}

CheckReport check_winding_concat(const UnitaryLoop& a, const UnitaryLoop& b, const CheckOptions& opt) {
  CheckReport r = start("winding-concat", opt);
  const UnitaryLoop cat = concat(a, b);
  const WindingResult wa = winding_number(a, opt.quad), wb = winding_number(b, opt.quad),
                      wc = winding_number(cat, opt.quad);
  r.residual = std::abs(wc.raw - wa.raw - wb.raw);
  r.scale = std::abs(wa.raw) + std::abs(wb.raw) + std::abs(wc.raw);
  r.detail = "rounded " + std::to_string(wc.rounded) + " = " + std::to_string(wa.rounded) + " + " +
             std::to_string(wb.rounded);
  finalize(r);
  r.passed = r.passed && wc.rounded == wa.rounded + wb.rounded;
  return r;
}

// --- holonomy ---------------------------------------------------------------

LineConnection random_line_connection(int n, std::uint64_t seed, double sup_norm, int modes) {
  if (modes < 1) throw Error(ErrorCode::Configuration, "random_line_connection: need at least one mode");
  std::vector<CMat> a, b;
  for (int k = 0; k < modes; ++k) {
    a.push_back(random_anti_hermitian(n, seed * 1000 + 2 * static_cast<std::uint64_t>(k)) / (1.0 + k));
    b.push_back(random_anti_hermitian(n, seed * 1000 + 2 * static_cast<std::uint64_t>(k) + 1) / (1.0 + k));
  }
  auto raw = [a, b](double t) {
    CMat x = CMat::Zero(a[0].rows(), a[0].cols());
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double w = 2.0 * kPi * static_cast<double>(k) * t;
      x += a[k] * std::cos(w);
      if (k) x += b[k] * std::sin(w);
    }
    return x;
  };
  double sup = 0.0;
  for (int i = 0; i <= 2048; ++i) sup = std::max(sup, norm2(raw(i / 2048.0)));
  const double f = sup > 0.0 ? sup_norm / sup : 0.0;
  std::function<CMat(double)> x = [raw, f](double t) { return CMat(f * raw(t)); };
  LineConnection out;
  out.base = Curve(lambda_family(
      1, 1, [](const Coords& c) { return CMat::Constant(1, 1, Complex(c.t, 0.0)); },
      [](const Coords&, int v) { return CMat::Constant(1, 1, Complex(v == kVarT ? 1.0 : 0.0, 0.0)); }));
  out.contraction = x;
  const Eigen::Index rank = n;
  out.connection.one_form = [x](double t, const CMat& v) { return CMat(v(0, 0) * x(t)); };
  out.connection.curvature = [rank](double, const CMat&, const CMat&) { return CMat(CMat::Zero(rank, rank)); };
  out.connection.rank = rank;
  return out;
}

CheckReport check_holonomy(const LineConnection& input, const CheckOptions& opt, int ode_steps) {
  CheckReport r = start("holonomy", opt);
  double c = 0.0;
  for (int i = 0; i <= 256; ++i) c = std::max(c, frob(input.contraction(i / 256.0)));
  const AutoResult res = with_auto_n(
      [&](int n) { return Evals{tr_hol_even(input.base, input.connection, 0, {}, n, opt.quad, opt.max_degree)}; }, c, 0, 0,
      opt);
  const Complex ode = trace(path_ordered_exp(input.contraction, ode_steps));
  r.residual = std::abs(res.values[0].value - ode);
  // Relative to the Frobenius norm √n of the unitary holonomy.
  r.scale = std::sqrt(static_cast<double>(input.connection.rank));
  r.n_max = res.n_max;
  r.budget.truncation = res.values[0].tail_bound;
  if (opt.quadrature_budget)
    r.budget.quadrature =
        std::abs(tr_hol_even(input.base, input.connection, 0, {}, res.n_max, halved(opt.quad), opt.max_degree).value -
                 res.values[0].value);
  finalize(r);
  return r;
}

// --- tensor -----------------------------------------------------------------

ConnectionData abelian_connection(const Curve& base, std::vector<double> a, std::vector<double> b,
                                  std::vector<double> c) {
  const auto m = static_cast<std::size_t>(base.rows());
  if (base.cols() != 1 || a.size() != m || b.size() != m || c.size() != m)
    throw Error(ErrorCode::Dimension, "abelian_connection: coefficient vectors must match the base dimension");
  auto dot = [](const std::vector<double>& u, const CMat& v) {
    Complex s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v(static_cast<Eigen::Index>(i), 0);
    return s;
  };
  ConnectionData out;
  out.rank = 1;
  out.one_form = [base, a, b, c, dot](double t, const CMat& v) {
    const CMat x = base.value(t);
    return CMat::Constant(1, 1, kI * (dot(a, v) + dot(b, x) * dot(c, v)));
  };
  out.curvature = [b, c, dot](double, const CMat& v, const CMat& w) {
    return CMat::Constant(1, 1, kI * (dot(b, v) * dot(c, w) - dot(b, w) * dot(c, v)));
  };
  return out;
}

ConnectionData tensor_connection(const ConnectionData& first, const ConnectionData& second) {
  if (first.rank != 1 || second.rank != 1)
    throw Error(ErrorCode::Dimension, "tensor_connection: only line bundles are supported");
  ConnectionData out;
  out.rank = 1;
  out.one_form = [first, second](double t, const CMat& v) { return CMat(first.one_form(t, v) + second.one_form(t, v)); };
  out.curvature = [first, second](double t, const CMat& v, const CMat& w) {
    return CMat(first.curvature(t, v, w) + second.curvature(t, v, w));
  };
  return out;
}

CheckReport check_tensor(const Curve& base, const ConnectionData& first, const ConnectionData& second,
                         std::span<const TangentField> vectors, const CheckOptions& opt) {
  if (vectors.size() != 2) throw Error(ErrorCode::Arity, "check_tensor: needs two tangent fields");
  CheckReport r = start("tensor", opt);
  const ConnectionData both = tensor_connection(first, second);
  double c = 0.0;
  for (int i = 0; i <= 64; ++i) {
    const double t = i / 64.0;
    const CMat v = base.velocity(t);
    c = std::max(c, std::abs(first.one_form(t, v)(0, 0)) + std::abs(second.one_form(t, v)(0, 0)));
  }
  const AutoResult res = with_auto_n(
      [&](int n) {
        Evals e;
        for (const ConnectionData* cd : {&both, &first, &second}) {
          e.push_back(tr_hol_even(base, *cd, 0, {}, n, opt.quad, opt.max_degree));
          e.push_back(tr_hol_even(base, *cd, 1, vectors, n, opt.quad, opt.max_degree));
        }
        return e;
      },
      c, 1, 1, opt);
  const auto& v = res.values;
  const Complex h = v[0].value, t2 = v[1].value, h1 = v[2].value, a2 = v[3].value, h2 = v[4].value, b2 = v[5].value;
  const double r0 = std::abs(h - h1 * h2), r2 = std::abs(t2 - (a2 * h2 + h1 * b2));
  r.residual = std::max(r0, r2);
  r.scale = std::max({max_scale(v), std::abs(h1 * h2), std::abs(a2 * h2) + std::abs(h1 * b2)});
  r.n_max = res.n_max;
  r.budget.truncation = total_tail(v);
  std::ostringstream ss;
  ss.precision(6);
  ss << "degree 0 residual " << r0 << ", degree 2 residual " << r2;
  r.detail = ss.str();
  finalize(r);
  return r;
}

// --- suites -----------------------------------------------------------------

std::string digest_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xf];
  return out;
}

namespace {

using detail::Json;

std::vector<double> point_of(const Json& j, int dim) {
  if (!j.contains("p")) return std::vector<double>(static_cast<std::size_t>(dim), 0.0);
  auto p = j.at("p").get<std::vector<double>>();
  if (static_cast<int>(p.size()) != dim)
    throw Error(ErrorCode::Configuration, "\"p\" has " + std::to_string(p.size()) + " entries, plot has " +
                                              std::to_string(dim) + " parameters");
  return p;
}

CheckOptions options_of(const Json& j, const SuiteConfig& cfg, double default_tol) {
  CheckOptions o;
  o.quad = cfg.quad;
  o.quad.grid_t = detail::get_int(j, "grid_t", o.quad.grid_t);
  o.quad.grid_s = detail::get_int(j, "grid_s", o.quad.grid_s);
  o.quad.mc_samples = detail::get_int(j, "mc_samples", o.quad.mc_samples);
  o.quad.validate();
  o.tolerance = detail::get_double(j, "tolerance", default_tol);
  o.n_max = detail::get_int(j, "n_max", 0);
  o.h = detail::get_double(j, "h", o.h);
  o.h_steps = detail::get_int(j, "h_steps", o.h_steps);
  o.min_order = detail::get_double(j, "min_order", 0.0);
  o.max_degree = detail::get_int(j, "max_degree", o.max_degree);
  if (j.contains("quadrature_budget")) o.quadrature_budget = j.at("quadrature_budget").get<bool>();
  if (o.tolerance <= 0.0 || o.h <= 0.0) throw Error(ErrorCode::Configuration, "tolerance and h must be positive");
  return o;
}

std::vector<double> doubles(const Json& j, const char* key, std::size_t n, double fallback) {
  if (!j.contains(key)) return std::vector<double>(n, fallback);
  auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != n) throw Error(ErrorCode::Configuration, std::string("\"") + key + "\" has the wrong length");
  return v;
}

CheckReport dispatch(const CheckSpec& spec, const SuiteConfig& cfg) {
  const Json j = detail::parse_json(spec.params_json, "check " + spec.name);
  const std::string& kind = spec.kind;
  const int degree = detail::get_int(j, "degree", 0);
  auto family = [&](const char* key) { return detail::family_from(detail::require(j, key, kind), cfg.base_dir); };
  auto loop_plot = [&](const char* key) {
    const GeneratedFamily g = family(key);
    if (g.s_dependent) throw Error(ErrorCode::Input, kind + ": \"" + key + "\" must be a loop plot");
    return LoopPlot(g.family, g.param_dim, g.tol);
  };
  auto cyl_plot = [&](const char* key) {
    const GeneratedFamily g = family(key);
    return CylinderPlot(g.family, g.param_dim, g.tol);
  };
  auto loop = [&](const char* key) {
    const GeneratedFamily g = family(key);
    if (g.param_dim != 0 || g.s_dependent) throw Error(ErrorCode::Input, kind + ": \"" + key + "\" must be a loop");
    return UnitaryLoop(g.family, {}, g.tol);
  };

  if (kind == "closure") {
    const LoopPlot plot = loop_plot("plot");
    return check_closure(plot, degree, point_of(j, plot.param_dim()), options_of(j, cfg, cfg.default_tolerance));
  }
  if (kind == "restriction") {
    const LoopPlot plot = loop_plot("plot");
    return check_restriction(plot, degree, point_of(j, plot.param_dim()), options_of(j, cfg, cfg.default_tolerance));
  }
  if (kind == "restriction-bcs") {
    const CylinderPlot plot = cyl_plot("cylinder");
    return check_restriction_bcs(plot, degree, point_of(j, plot.param_dim()), options_of(j, cfg, cfg.default_tolerance));
  }
  if (kind == "transgression") {
    const CylinderPlot plot = cyl_plot("cylinder");
    return check_transgression(plot, detail::get_int(j, "degree", 1), point_of(j, plot.param_dim()),
                               options_of(j, cfg, cfg.default_tolerance));
  }
  if (kind == "map-transgression") {
    const CylinderPlot plot = cyl_plot("cylinder");
    return check_map_transgression(plot, detail::get_int(j, "degree", 1), point_of(j, plot.param_dim()),
                                   options_of(j, cfg, cfg.default_tolerance));
  }
  if (kind == "gauge-cs") {
    const LoopPlot plot = loop_plot("plot");
    return check_gauge_cs(plot, degree, point_of(j, plot.param_dim()), options_of(j, cfg, cfg.default_tolerance));
  }
  if (kind == "route" && j.contains("loop")) {
    const UnitaryLoop g = loop("loop");
    const Json f = j.value("fields", Json::object());
    const auto fields = random_fourier_fields(g, degree, f.value("seed", std::uint64_t{0}), detail::get_int(f, "modes", 2),
                                              detail::get_double(f, "scale", 0.5));
    return check_route(g, fields, options_of(j, cfg, cfg.default_tolerance));
  }
  if (kind == "route") {
    const LoopPlot plot = loop_plot("plot");
    return check_route(plot, degree, point_of(j, plot.param_dim()), options_of(j, cfg, cfg.default_tolerance));
  }
  if (kind == "additivity") {
    const AdditivityMode mode = parse_additivity_mode(detail::require(j, "mode", kind).get<std::string>());
    const GeneratedFamily a = family("a");
    GeneratedFamily b;
    int dim = a.param_dim;
    if (mode != AdditivityMode::Inverse) {
      b = family("b");
      dim = std::max(dim, b.param_dim);
    }
    return check_additivity(mode, a.family, b.family, dim, degree, point_of(j, dim),
                            options_of(j, cfg, cfg.default_tolerance));
  }
  if (kind == "winding") {
    const auto expected = detail::require(j, "expected", kind).get<long long>();
    return check_winding(loop("loop"), expected, options_of(j, cfg, 1e-8));
  }
  if (kind == "winding-concat") return check_winding_concat(loop("a"), loop("b"), options_of(j, cfg, 1e-8));
  if (kind == "holonomy") {
    const LineConnection in =
        random_line_connection(detail::get_int(j, "n", 2), j.value("seed", std::uint64_t{0}),
                               detail::get_double(j, "sup_norm", 1.0), detail::get_int(j, "modes", 3));
    return check_holonomy(in, options_of(j, cfg, cfg.default_tolerance), detail::get_int(j, "ode_steps", 4000));
  }
  if (kind == "tensor") {
    const int m = detail::get_int(j, "m", 2);
    const double radius = detail::get_double(j, "radius", 1.0);
    if (m < 2) throw Error(ErrorCode::Configuration, "tensor: base dimension m must be at least 2");
    const Curve base(lambda_family(
        m, 1,
        [m, radius](const Coords& c) {
          CMat x = CMat::Zero(m, 1);
          x(0, 0) = radius * std::cos(2.0 * kPi * c.t);
          x(1, 0) = radius * std::sin(2.0 * kPi * c.t);
          return x;
        },
        [m, radius](const Coords& c, int v) {
          CMat x = CMat::Zero(m, 1);
          if (v != kVarT) return x;
          x(0, 0) = -2.0 * kPi * radius * std::sin(2.0 * kPi * c.t);
          x(1, 0) = 2.0 * kPi * radius * std::cos(2.0 * kPi * c.t);
          return x;
        }));
    const auto um = static_cast<std::size_t>(m);
    const ConnectionData c1 = abelian_connection(base, doubles(j, "a1", um, 0.1), doubles(j, "b1", um, 0.2),
                                                 doubles(j, "c1", um, 0.3));
    const ConnectionData c2 = abelian_connection(base, doubles(j, "a2", um, -0.2), doubles(j, "b2", um, 0.1),
                                                 doubles(j, "c2", um, -0.1));
    auto field = [&](const char* key, double fallback) {
      const auto d = doubles(j, key, um, fallback);
      CMat v(m, 1);
      for (int i = 0; i < m; ++i) v(i, 0) = d[static_cast<std::size_t>(i)];
      return constant_field(base, v);
    };
    const std::vector<TangentField> vw{field("v", 1.0), field("w", -0.5)};
    return check_tensor(base, c1, c2, vw, options_of(j, cfg, cfg.default_tolerance));
  }
  throw Error(ErrorCode::Configuration, "unknown check kind '" + kind + "'");
}

}  // namespace

CheckReport run_check(const CheckSpec& spec, const SuiteConfig& cfg) {
  CheckReport r;
  try {
    r = dispatch(spec, cfg);
  } catch (const detail::Json::exception& e) {
    throw Error(ErrorCode::Input, "check " + spec.name + ": " + e.what());
  }
  r.name = spec.name;
  r.kind = spec.kind;
  std::ostringstream q;
  q << cfg.quad.grid_t << '/' << cfg.quad.grid_s << '/' << to_string(cfg.quad.rule) << '/' << cfg.quad.mc_samples << '/'
    << cfg.quad.seed;
  r.digest = digest_hex(spec.params_json + "|" + q.str());
  return r;
}

SuiteResult run_suite(const SuiteConfig& cfg) {
  SuiteResult out;
  out.name = cfg.name;
  out.config_json = cfg.config_json;
  std::vector<CheckReport> reports(cfg.checks.size());
  std::vector<std::exception_ptr> errors(cfg.checks.size());
  parallel_for(cfg.checks.size(), [&](std::size_t i) {
    try {
      reports[i] = run_check(cfg.checks[i], cfg);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::stable_sort(reports.begin(), reports.end(), [](const CheckReport& a, const CheckReport& b) {
    return a.name != b.name ? a.name < b.name : a.digest < b.digest;
  });
  for (const auto& r : reports) (r.passed ? out.passed : out.failed)++;
  out.reports = std::move(reports);
  return out;
}

}  // namespace lchern
