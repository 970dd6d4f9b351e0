#include "lchern/loopgeom.hpp"

#include <cmath>

namespace lchern {

namespace {

Coords at_time(const Coords& context, double t) {
  Coords c = context;
  c.t = t;
  return c;
}

double max_abs(const CMat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

Curve::Curve(FamilyPtr family, Coords context) : family_(std::move(family)), context_(std::move(context)) {
  if (!family_) throw Error(ErrorCode::Input, "Curve: null family");
}

CMat Curve::value(double t) const { return family_->value(at_time(context_, t)); }

CMat Curve::velocity(double t) const { return family_->partial(at_time(context_, t), kVarT); }

Jet Curve::jet(double t, std::span<const int> vars) const { return family_->eval(at_time(context_, t), vars); }

bool Curve::same_base(const Curve& other) const {
  return family_ == other.family_ && context_.s == other.context_.s && context_.p == other.context_.p;
}

LoopDiagnostics inspect_loop(const Curve& curve, int samples) {
  LoopDiagnostics d;
  const int vars[1] = {kVarT};
  const Jet j0 = curve.jet(0.0, vars);
  const Jet j1 = curve.jet(1.0, vars);
  d.periodicity = max_abs(j0.value - j1.value);
  d.velocity_gap = max_abs(j0.d[0] - j1.d[0]);
  for (int i = 0; i <= samples; ++i) {
    // Irrational offset keeps samples off the dyadic grids used elsewhere.
    const double t = std::fmod(i * 0.6180339887498949, 1.0);
    const Jet j = curve.jet(t, vars);
    d.unitarity = std::max(d.unitarity, unitarity_defect(j.value));
    const CMat w = j.value.partialPivLu().solve(j.d[0]);
    d.anti_hermitian = std::max(d.anti_hermitian, max_abs(w + w.adjoint()));
  }
  return d;
}

UnitaryLoop::UnitaryLoop(FamilyPtr family, Coords context, double tol) : Curve(std::move(family), std::move(context)) {
  if (rows() != cols()) throw Error(ErrorCode::Dimension, "UnitaryLoop: values must be square");
  const LoopDiagnostics d = inspect_loop(*this);
  if (d.unitarity > tol)
    throw Error(ErrorCode::NonUnitary, "UnitaryLoop: unitarity defect " + std::to_string(d.unitarity));
  if (d.periodicity > tol || d.velocity_gap > std::max(tol, 1e-6))
    throw Error(ErrorCode::NotALoop, "UnitaryLoop: curve is not closed (gap " + std::to_string(d.periodicity) +
                                         ", velocity gap " + std::to_string(d.velocity_gap) + ")");
}

UnitaryLoop UnitaryLoop::unchecked(FamilyPtr family, Coords context) {
  UnitaryLoop loop;
  loop.family_ = std::move(family);
  loop.context_ = std::move(context);
  return loop;
}

CMat UnitaryLoop::maurer_cartan(double t) const {
  const int vars[1] = {kVarT};
  const Jet j = jet(t, vars);
  return j.value.partialPivLu().solve(j.d[0]);
}

TangentField::TangentField(Curve base, std::function<CMat(double)> fn) : base_(std::move(base)), fn_(std::move(fn)) {}

TangentField rotation_field(const Curve& curve) {
  return TangentField(curve, [curve](double t) { return curve.velocity(t); });
}

TangentField constant_field(const Curve& curve, const CMat& v) {
  return TangentField(curve, [v](double) { return v; });
}

TangentField left_translated_field(const Curve& curve, std::function<CMat(double)> xi) {
  return TangentField(curve, [curve, xi = std::move(xi)](double t) { return CMat(curve.value(t) * xi(t)); });
}

TangentField fourier_left_field(const Curve& curve, std::vector<CMat> cos_coeffs, std::vector<CMat> sin_coeffs) {
  return left_translated_field(curve, [c = std::move(cos_coeffs), s = std::move(sin_coeffs), n = curve.rows()](double t) {
    CMat xi = CMat::Zero(n, n);
    for (std::size_t k = 0; k < c.size(); ++k) xi += std::cos(2.0 * kPi * double(k) * t) * c[k];
    for (std::size_t k = 0; k < s.size(); ++k) xi += std::sin(2.0 * kPi * double(k + 1) * t) * s[k];
    return xi;
  });
}

TangentField scaled_field(const TangentField& v, Complex lambda) {
  return TangentField(v.base(), [v, lambda](double t) { return CMat(lambda * v(t)); });
}

TangentField sum_field(const TangentField& a, const TangentField& b) {
  if (!a.base().same_base(b.base())) throw Error(ErrorCode::WrongBase, "sum_field: fields over different loops");
  return TangentField(a.base(), [a, b](double t) { return CMat(a(t) + b(t)); });
}

// --- generators -------------------------------------------------------------

CMat winding_generator(std::span<const int> k) {
  const int n = static_cast<int>(k.size());
  if (n == 0) throw Error(ErrorCode::Dimension, "winding_generator: empty exponent list");
  CMat x = CMat::Zero(n, n);
  for (int i = 0; i < n; ++i) x(i, i) = kI * (2.0 * kPi * k[static_cast<std::size_t>(i)]);
  return x;
}

UnitaryLoop exp_loop(const CMat& x, const CMat& g0) {
  if (x.rows() != x.cols() || g0.rows() != x.rows() || g0.cols() != x.cols())
    throw Error(ErrorCode::Dimension, "exp_loop: generator and base point must be square of one size");
  const double gap = max_abs(expm(x) - identity(static_cast<int>(x.rows())));
  if (gap > 1e-9)
    throw Error(ErrorCode::NotALoop, "exp_loop: exp(X) differs from I by " + std::to_string(gap));
  if (!is_unitary(g0, 1e-9)) throw Error(ErrorCode::NonUnitary, "exp_loop: base point is not unitary");
  FamilyPtr f = exp_family({ExpTerm{scalar_var(kVarT), x}});
  if (max_abs(g0 - identity(static_cast<int>(g0.rows()))) > 0.0) f = product_family(constant_family(g0), f);
  return UnitaryLoop(f);
}

UnitaryLoop exp_loop(const CMat& x) { return exp_loop(x, identity(static_cast<int>(x.rows()))); }

UnitaryLoop constant_loop(const CMat& g) {
  if (g.rows() != g.cols()) throw Error(ErrorCode::Dimension, "constant_loop: not square");
  if (!is_unitary(g, 1e-9)) throw Error(ErrorCode::NonUnitary, "constant_loop: value is not unitary");
  return UnitaryLoop(constant_family(g));
}

namespace {

FamilyPtr loop_family(const Curve& c) { return pinned_family(c.family(), c.context().s, c.context().p); }

}  // namespace

UnitaryLoop direct_sum(const UnitaryLoop& a, const UnitaryLoop& b) {
  return UnitaryLoop(block_diag_family(loop_family(a), loop_family(b)));
}

UnitaryLoop concat(const UnitaryLoop& a, const UnitaryLoop& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::Dimension, "concat: loops in different U(n)");
  const double gap = max_abs(a.value(1.0) - b.value(0.0));
  if (gap > 1e-9) throw Error(ErrorCode::EndpointMismatch, "concat: endpoint mismatch " + std::to_string(gap));
  return UnitaryLoop(concat_family(loop_family(a), loop_family(b), kVarT));
}

UnitaryLoop inverse(const UnitaryLoop& a) { return UnitaryLoop(inverse_family(loop_family(a))); }

UnitaryLoop product(const UnitaryLoop& a, const UnitaryLoop& b) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::Dimension, "product: loops in different U(n)");
  return UnitaryLoop(product_family(loop_family(a), loop_family(b)));
}

TangentField direct_sum_field(const UnitaryLoop& sum, const TangentField& a, const TangentField& b) {
  if (sum.dim() != a.base().rows() + b.base().rows())
    throw Error(ErrorCode::Dimension, "direct_sum_field: block sizes do not match the sum loop");
  return TangentField(sum, [a, b](double t) { return block_diag(a(t), b(t)); });
}

TangentField concat_field(const UnitaryLoop& cat, const TangentField& a, const TangentField& b) {
  const double gap = max_abs(a(1.0) - b(0.0));
  if (gap > 1e-9) throw Error(ErrorCode::EndpointMismatch, "concat_field: fields disagree at the junction");
  return TangentField(cat, [a, b](double t) {
    return t <= 0.5 ? a(flat_reparam(2.0 * t)) : b(flat_reparam(2.0 * t - 1.0));
  });
}

TangentField inverse_field(const UnitaryLoop& inv, const TangentField& v) {
  const Curve base = v.base();
  return TangentField(inv, [base, v](double t) {
    const CMat gi = base.value(t).partialPivLu().inverse();
    return CMat(-gi * v(t) * gi);
  });
}

TabulatedLoop tabulated_loop(std::span<const CMat> samples, const std::string& mode) {
  if (mode != "fourier") throw Error(ErrorCode::Configuration, "tabulated_loop: unsupported interpolation '" + mode + "'");
  const int m = static_cast<int>(samples.size());
  if (m < 8) throw Error(ErrorCode::Input, "tabulated_loop: need at least 8 samples, got " + std::to_string(m));
  const Eigen::Index n = samples.front().rows();
  double worst = 0.0;
  for (const auto& g : samples) {
    if (g.rows() != n || g.cols() != n) throw Error(ErrorCode::Dimension, "tabulated_loop: inconsistent sample shapes");
    if (!all_finite(g)) throw Error(ErrorCode::Input, "tabulated_loop: non-finite sample entries");
    worst = std::max(worst, unitarity_defect(g));
  }
  if (worst > 1e-6)
    throw Error(ErrorCode::NonUnitary, "tabulated_loop: sample unitarity defect " + std::to_string(worst));

  // Minimal-degree trigonometric interpolant; for even M the Nyquist mode is
  // split evenly between ±M/2.
  const int half = m / 2;
  const int kmin = -half;
  std::vector<CMat> coeffs(static_cast<std::size_t>(2 * half + 1), CMat::Zero(n, n));
  for (int k = kmin; k <= half; ++k) {
    CMat c = CMat::Zero(n, n);
    for (int j = 0; j < m; ++j) c += std::exp(-kI * (2.0 * kPi * k * j / m)) * samples[static_cast<std::size_t>(j)];
    c /= static_cast<double>(m);
    if (m % 2 == 0 && std::abs(k) == half) c *= 0.5;
    coeffs[static_cast<std::size_t>(k - kmin)] = c;
  }
  FamilyPtr f = fourier_family(std::move(coeffs), kmin);
  TabulatedLoop out{UnitaryLoop::unchecked(f), 0.0};
  for (int j = 0; j < 4 * m; ++j)
    out.unitarity_drift = std::max(out.unitarity_drift, unitarity_defect(out.loop.value((j + 0.5) / (4.0 * m))));
  return out;
}

// --- plots and cylinders ----------------------------------------------------

LoopPlot::LoopPlot(FamilyPtr family, int param_dim, double tol)
    : family_(std::move(family)), param_dim_(param_dim), tol_(tol) {
  if (param_dim_ < 0) throw Error(ErrorCode::Dimension, "LoopPlot: negative parameter dimension");
}

UnitaryLoop LoopPlot::at(std::span<const double> p) const {
  if (static_cast<int>(p.size()) != param_dim_) throw Error(ErrorCode::Dimension, "LoopPlot::at: wrong point dimension");
  return UnitaryLoop(family_, Coords{0.0, 0.0, {p.begin(), p.end()}}, tol_);
}

TangentField LoopPlot::partial(std::span<const double> p, int i) const {
  if (i < 0 || i >= param_dim_) throw Error(ErrorCode::Domain, "LoopPlot::partial: index out of range");
  Curve base(family_, Coords{0.0, 0.0, {p.begin(), p.end()}});
  const int var = var_p(i);
  return TangentField(base, [base, var](double t) {
    const int vars[1] = {var};
    return base.jet(t, vars).d[0];
  });
}

CylinderMap::CylinderMap(FamilyPtr family, std::vector<double> p, double tol)
    : family_(std::move(family)), p_(std::move(p)) {
  if (!family_) throw Error(ErrorCode::Input, "CylinderMap: null family");
  for (double s : {0.0, 0.37, 1.0}) (void)UnitaryLoop(family_, Coords{0.0, s, p_}, tol);
}

UnitaryLoop CylinderMap::at(double s) const { return UnitaryLoop::unchecked(family_, Coords{0.0, s, p_}); }

TangentField CylinderMap::sderiv(double s) const {
  UnitaryLoop base = at(s);
  return TangentField(base, [base](double t) {
    const int vars[1] = {kVarS};
    return base.jet(t, vars).d[0];
  });
}

CMat CylinderMap::value(double s, double t) const { return family_->value(Coords{t, s, p_}); }

Jet CylinderMap::jet(double s, double t, std::span<const int> vars) const {
  return family_->eval(Coords{t, s, p_}, vars);
}

bool CylinderMap::same_base(const CylinderMap& other) const { return family_ == other.family_ && p_ == other.p_; }

CylinderField::CylinderField(CylinderMap base, std::function<CMat(double, double)> fn)
    : base_(std::move(base)), fn_(std::move(fn)) {}

CylinderField cylinder_rotation_field(const CylinderMap& cyl) {
  return CylinderField(cyl, [cyl](double s, double t) {
    const int vars[1] = {kVarT};
    return cyl.jet(s, t, vars).d[0];
  });
}

TangentField slice(const CylinderField& v, double s) {
  return TangentField(v.base().at(s), [v, s](double t) { return v(s, t); });
}

CylinderField scaled_field(const CylinderField& v, Complex lambda) {
  return CylinderField(v.base(), [v, lambda](double s, double t) { return CMat(lambda * v(s, t)); });
}

CylinderPlot::CylinderPlot(FamilyPtr family, int param_dim, double tol)
    : family_(std::move(family)), param_dim_(param_dim), tol_(tol) {}

CylinderMap CylinderPlot::at(std::span<const double> p) const {
  if (static_cast<int>(p.size()) != param_dim_)
    throw Error(ErrorCode::Dimension, "CylinderPlot::at: wrong point dimension");
  return CylinderMap(family_, {p.begin(), p.end()}, tol_);
}

CylinderField CylinderPlot::partial(std::span<const double> p, int i) const {
  if (i < 0 || i >= param_dim_) throw Error(ErrorCode::Domain, "CylinderPlot::partial: index out of range");
  CylinderMap base = CylinderMap(family_, {p.begin(), p.end()}, 1.0);
  const int var = var_p(i);
  return CylinderField(base, [base, var](double s, double t) {
    const int vars[1] = {var};
    return base.jet(s, t, vars).d[0];
  });
}

FamilyPtr wobble_family(const Curve& base, const CMat& offset, std::vector<CMat> directions) {
  std::vector<ExpTerm> terms{ExpTerm{scalar_sin2pi_t(1), offset}};
  for (std::size_t i = 0; i < directions.size(); ++i)
    terms.push_back(ExpTerm{scalar_product(scalar_sin2pi_t(1), scalar_var(var_p(static_cast<int>(i)))), directions[i]});
  return product_family(loop_family(base), exp_family(std::move(terms)));
}

FamilyPtr translate_family(const CMat& g0, std::vector<CMat> directions) {
  if (directions.empty()) return constant_family(g0);
  std::vector<ExpTerm> terms;
  for (std::size_t i = 0; i < directions.size(); ++i)
    terms.push_back(ExpTerm{scalar_var(var_p(static_cast<int>(i))), directions[i]});
  return product_family(constant_family(g0), exp_family(std::move(terms)));
}

FamilyPtr sweep_family(FamilyPtr base, const CMat& offset, std::vector<CMat> directions) {
  std::vector<ExpTerm> terms{ExpTerm{scalar_var(kVarS), offset}};
  for (std::size_t i = 0; i < directions.size(); ++i)
    terms.push_back(ExpTerm{scalar_product(scalar_var(kVarS), scalar_var(var_p(static_cast<int>(i)))), directions[i]});
  return product_family(std::move(base), exp_family(std::move(terms)));
}

// --- connection data --------------------------------------------------------

ConnectionData ConnectionPath::at(double s) const {
  return ConnectionData{[f = one_form, s](double t, const CMat& v) { return f(s, t, v); },
                        [f = curvature, s](double t, const CMat& v, const CMat& w) { return f(s, t, v, w); }, rank};
}

ConnectionData grassmann_connection(FamilyPtr projector, const Curve& base, double tol) {
  if (base.cols() != 1) throw Error(ErrorCode::Dimension, "grassmann_connection: base curve must be a column in R^m");
  const int m = static_cast<int>(base.rows());
  const Eigen::Index n = projector->rows();
  auto point = [base, m](double t) {
    Coords c;
    const CMat x = base.value(t);
    c.p.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) c.p[static_cast<std::size_t>(i)] = x(i, 0).real();
    return c;
  };
  for (double t : {0.0, 0.31, 0.77}) {
    const CMat p = projector->value(point(t));
    const double defect = std::max(max_abs(p * p - p), max_abs(p - p.adjoint()));
    if (defect > tol) throw Error(ErrorCode::NonProjector, "grassmann_connection: not a Hermitian projector");
  }
  std::vector<int> vars(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) vars[static_cast<std::size_t>(i)] = var_p(i);
  // dP(v) = Σ_i v_i ∂_i P at γ(t).
  auto jet_at = [projector, point, vars](double t) { return projector->eval(point(t), vars); };
  auto dp = [m, n](const Jet& j, const CMat& v) {
    CMat out = CMat::Zero(n, n);
    for (int i = 0; i < m; ++i) out += v(i, 0) * j.d[static_cast<std::size_t>(i)];
    return out;
  };
  ConnectionData conn;
  conn.rank = n;
  conn.one_form = [jet_at, dp](double t, const CMat& v) {
    const Jet j = jet_at(t);
    return CMat(j.value * dp(j, v));
  };
  conn.curvature = [jet_at, dp](double t, const CMat& v, const CMat& w) {
    const Jet j = jet_at(t);
    const CMat a = dp(j, v), b = dp(j, w);
    return CMat(j.value * (a * b - b * a));
  };
  return conn;
}

ConnectionPath gauge_path_connection(const Curve& loop) {
  ConnectionPath path;
  path.rank = loop.rows();
  auto mc = [loop](double t, const CMat& v) { return CMat(loop.value(t).partialPivLu().solve(v)); };
  path.one_form = [mc](double s, double t, const CMat& v) { return CMat(s * mc(t, v)); };
  path.s_deriv_one_form = [mc](double, double t, const CMat& v) { return mc(t, v); };
  path.curvature = [loop](double s, double t, const CMat& v, const CMat& w) {
    const auto lu = loop.value(t).partialPivLu();
    const CMat a = lu.solve(v), b = lu.solve(w);
    return CMat(-s * (1.0 - s) * (a * b - b * a));
  };
  return path;
}

}  // namespace lchern
