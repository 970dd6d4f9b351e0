#include "lchern/family.hpp"

#include <array>
#include <cmath>

namespace lchern {

double Coords::get(int var) const {
  if (var == kVarT) return t;
  if (var == kVarS) return s;
  const int i = var - kVarP0;
  if (i < 0 || i >= static_cast<int>(p.size()))
    throw Error(ErrorCode::Domain, "Coords: parameter index " + std::to_string(i) + " out of range");
  return p[static_cast<std::size_t>(i)];
}

void Coords::set(int var, double value) {
  if (var == kVarT) {
    t = value;
  } else if (var == kVarS) {
    s = value;
  } else {
    const int i = var - kVarP0;
    if (i < 0 || i >= static_cast<int>(p.size()))
      throw Error(ErrorCode::Domain, "Coords: parameter index " + std::to_string(i) + " out of range");
    p[static_cast<std::size_t>(i)] = value;
  }
}

CMat Family::value(const Coords& c) const { return eval(c, {}).value; }

CMat Family::partial(const Coords& c, int var) const {
  const int vars[1] = {var};
  return eval(c, vars).d.front();
}

// --- scalar weights ---------------------------------------------------------

ScalarFn scalar_constant(double c) {
  return {[c](const Coords&) { return c; }, [](const Coords&, int) { return 0.0; }};
}

ScalarFn scalar_var(int var) {
  return {[var](const Coords& x) { return x.get(var); },
          [var](const Coords&, int v) { return v == var ? 1.0 : 0.0; }};
}

ScalarFn scalar_sin2pi_t(int freq) {
  const double w = 2.0 * kPi * freq;
  return {[w](const Coords& x) { return std::sin(w * x.t); },
          [w](const Coords& x, int v) { return v == kVarT ? w * std::cos(w * x.t) : 0.0; }};
}

ScalarFn scalar_cos2pi_t(int freq) {
  const double w = 2.0 * kPi * freq;
  return {[w](const Coords& x) { return std::cos(w * x.t); },
          [w](const Coords& x, int v) { return v == kVarT ? -w * std::sin(w * x.t) : 0.0; }};
}

ScalarFn scalar_product(ScalarFn a, ScalarFn b) {
  return {[a, b](const Coords& x) { return a.value(x) * b.value(x); },
          [a, b](const Coords& x, int v) { return a.partial(x, v) * b.value(x) + a.value(x) * b.partial(x, v); }};
}

ScalarFn scalar_sum(ScalarFn a, ScalarFn b) {
  return {[a, b](const Coords& x) { return a.value(x) + b.value(x); },
          [a, b](const Coords& x, int v) { return a.partial(x, v) + b.partial(x, v); }};
}

namespace {

CMat zeros_like(const Family& f) { return CMat::Zero(f.rows(), f.cols()); }

class ConstantFamily final : public Family {
 public:
  explicit ConstantFamily(CMat g) : g_(std::move(g)) {}
  Eigen::Index rows() const override { return g_.rows(); }
  Eigen::Index cols() const override { return g_.cols(); }
  Jet eval(const Coords&, std::span<const int> vars) const override {
    return {g_, std::vector<CMat>(vars.size(), CMat::Zero(g_.rows(), g_.cols()))};
  }

 private:
  CMat g_;
};

class ExpFamily final : public Family {
 public:
  explicit ExpFamily(std::vector<ExpTerm> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw Error(ErrorCode::Dimension, "exp_family: no generators");
    n_ = terms_.front().generator.rows();
    for (const auto& term : terms_)
      if (term.generator.rows() != n_ || term.generator.cols() != n_)
        throw Error(ErrorCode::Dimension, "exp_family: generators must share one square shape");
  }
  Eigen::Index rows() const override { return n_; }
  Eigen::Index cols() const override { return n_; }

  Jet eval(const Coords& c, std::span<const int> vars) const override {
    CMat m = CMat::Zero(n_, n_);
    for (const auto& term : terms_) m += term.weight.value(c) * term.generator;
    Jet jet{expm(m), {}};
    jet.d.reserve(vars.size());
    for (int v : vars) {
      CMat dm = CMat::Zero(n_, n_);
      bool nonzero = false;
      for (const auto& term : terms_) {
        const double w = term.weight.partial(c, v);
        if (w != 0.0) {
          dm += w * term.generator;
          nonzero = true;
        }
      }
      jet.d.push_back(nonzero ? expm_frechet(m, dm) : CMat::Zero(n_, n_));
    }
    return jet;
  }

 private:
  std::vector<ExpTerm> terms_;
  Eigen::Index n_ = 0;
};

class ProductFamily final : public Family {
 public:
  ProductFamily(FamilyPtr a, FamilyPtr b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_->cols() != b_->rows()) throw Error(ErrorCode::Dimension, "product_family: shape mismatch");
  }
  Eigen::Index rows() const override { return a_->rows(); }
  Eigen::Index cols() const override { return b_->cols(); }
  Jet eval(const Coords& c, std::span<const int> vars) const override {
    Jet ja = a_->eval(c, vars);
    Jet jb = b_->eval(c, vars);
    Jet out{ja.value * jb.value, {}};
    out.d.reserve(vars.size());
    for (std::size_t i = 0; i < vars.size(); ++i) out.d.push_back(ja.d[i] * jb.value + ja.value * jb.d[i]);
    return out;
  }

 private:
  FamilyPtr a_, b_;
};

class InverseFamily final : public Family {
 public:
  explicit InverseFamily(FamilyPtr a) : a_(std::move(a)) {
    if (a_->rows() != a_->cols()) throw Error(ErrorCode::Dimension, "inverse_family: not square");
  }
  Eigen::Index rows() const override { return a_->rows(); }
  Eigen::Index cols() const override { return a_->cols(); }
  Jet eval(const Coords& c, std::span<const int> vars) const override {
    Jet ja = a_->eval(c, vars);
    CMat inv = ja.value.partialPivLu().inverse();
    Jet out{inv, {}};
    out.d.reserve(vars.size());
    for (std::size_t i = 0; i < vars.size(); ++i) out.d.push_back(-inv * ja.d[i] * inv);
    return out;
  }

 private:
  FamilyPtr a_;
};

class BlockDiagFamily final : public Family {
 public:
  BlockDiagFamily(FamilyPtr a, FamilyPtr b) : a_(std::move(a)), b_(std::move(b)) {}
  Eigen::Index rows() const override { return a_->rows() + b_->rows(); }
  Eigen::Index cols() const override { return a_->cols() + b_->cols(); }
  Jet eval(const Coords& c, std::span<const int> vars) const override {
    Jet ja = a_->eval(c, vars);
    Jet jb = b_->eval(c, vars);
    Jet out{block_diag(ja.value, jb.value), {}};
    out.d.reserve(vars.size());
    for (std::size_t i = 0; i < vars.size(); ++i) out.d.push_back(block_diag(ja.d[i], jb.d[i]));
    return out;
  }

 private:
  FamilyPtr a_, b_;
};

class ConcatFamily final : public Family {
 public:
  ConcatFamily(FamilyPtr a, FamilyPtr b, int var) : a_(std::move(a)), b_(std::move(b)), var_(var) {
    if (a_->rows() != b_->rows() || a_->cols() != b_->cols())
      throw Error(ErrorCode::Dimension, "concat_family: shape mismatch");
  }
  Eigen::Index rows() const override { return a_->rows(); }
  Eigen::Index cols() const override { return a_->cols(); }
  Jet eval(const Coords& c, std::span<const int> vars) const override {
    const double u = c.get(var_);
    const bool first = u <= 0.5;
    const double local = first ? 2.0 * u : 2.0 * u - 1.0;
    Coords inner = c;
    inner.set(var_, flat_reparam(local));
    Jet jet = (first ? a_ : b_)->eval(inner, vars);
    const double chain = 2.0 * flat_reparam_derivative(local);
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i] == var_) jet.d[i] *= chain;
    return jet;
  }

 private:
  FamilyPtr a_, b_;
  int var_;
};

class FourierFamily final : public Family {
 public:
  FourierFamily(std::vector<CMat> coeffs, int kmin) : coeffs_(std::move(coeffs)), kmin_(kmin) {
    if (coeffs_.empty()) throw Error(ErrorCode::Dimension, "fourier_family: no coefficients");
  }
  Eigen::Index rows() const override { return coeffs_.front().rows(); }
  Eigen::Index cols() const override { return coeffs_.front().cols(); }
  Jet eval(const Coords& c, std::span<const int> vars) const override {
    CMat value = CMat::Zero(rows(), cols());
    CMat dt = CMat::Zero(rows(), cols());
    for (std::size_t j = 0; j < coeffs_.size(); ++j) {
      const double k = static_cast<double>(kmin_ + static_cast<int>(j));
      const Complex phase = std::exp(kI * (2.0 * kPi * k * c.t));
      value += phase * coeffs_[j];
      dt += (kI * (2.0 * kPi * k)) * phase * coeffs_[j];
    }
    Jet out{value, {}};
    for (int v : vars) out.d.push_back(v == kVarT ? dt : CMat::Zero(rows(), cols()));
    return out;
  }

 private:
  std::vector<CMat> coeffs_;
  int kmin_;
};

class PinnedFamily final : public Family {
 public:
  PinnedFamily(FamilyPtr base, std::optional<double> s, std::optional<std::vector<double>> p)
      : base_(std::move(base)), s_(s), p_(std::move(p)) {}
  Eigen::Index rows() const override { return base_->rows(); }
  Eigen::Index cols() const override { return base_->cols(); }
  Jet eval(const Coords& c, std::span<const int> vars) const override {
    Coords inner = c;
    if (s_) inner.s = *s_;
    if (p_) inner.p = *p_;
    std::vector<int> free;
    for (int v : vars)
      if (!pinned(v)) free.push_back(v);
    Jet j = base_->eval(inner, free);
    Jet out{std::move(j.value), {}};
    std::size_t k = 0;
    for (int v : vars) out.d.push_back(pinned(v) ? zeros_like(*base_) : std::move(j.d[k++]));
    return out;
  }

 private:
  bool pinned(int v) const { return (v == kVarS && s_) || (v >= kVarP0 && p_); }
  FamilyPtr base_;
  std::optional<double> s_;
  std::optional<std::vector<double>> p_;
};

class LambdaFamily final : public Family {
 public:
  LambdaFamily(Eigen::Index rows, Eigen::Index cols, std::function<CMat(const Coords&)> value,
               std::function<CMat(const Coords&, int)> partial, LambdaOptions options)
      : rows_(rows), cols_(cols), value_(std::move(value)), partial_(std::move(partial)), options_(options) {}
  Eigen::Index rows() const override { return rows_; }
  Eigen::Index cols() const override { return cols_; }
  Jet eval(const Coords& c, std::span<const int> vars) const override {
    Jet out{value_(c), {}};
    for (int v : vars) out.d.push_back(partial_ ? partial_(c, v) : central(c, v));
    return out;
  }

 private:
  CMat difference(const Coords& c, int v, double h) const {
    Coords plus = c, minus = c;
    plus.set(v, c.get(v) + h);
    minus.set(v, c.get(v) - h);
    return (value_(plus) - value_(minus)) / (2.0 * h);
  }
  CMat central(const Coords& c, int v) const {
    const double h = options_.fd_step;
    if (!options_.richardson) return difference(c, v, h);
    return (4.0 * difference(c, v, 0.5 * h) - difference(c, v, h)) / 3.0;
  }

  Eigen::Index rows_, cols_;
  std::function<CMat(const Coords&)> value_;
  std::function<CMat(const Coords&, int)> partial_;
  LambdaOptions options_;
};

// --- flat reparametrizer ----------------------------------------------------

double bump(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return std::exp(-1.0 / (u * (1.0 - u)));
}

struct GaussLegendre16 {
  std::array<double, 16> x{}, w{};
  GaussLegendre16() {
    constexpr int n = 16;
    for (int i = 0; i < n; ++i) {
      double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        const double dp = n * (z * p1 - p0) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (z * p1 - p0) / (z * z - 1.0);
      x[i] = z;
      w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
  double integrate(double a, double b) const {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < 16; ++i) acc += w[i] * bump(mid + half * x[i]);
    return acc * half;
  }
};

struct ReparamTable {
  static constexpr int kCells = 512;
  GaussLegendre16 gl;
  std::array<double, kCells + 1> cumulative{};
  ReparamTable() {
    for (int i = 0; i < kCells; ++i)
      cumulative[i + 1] = cumulative[i] + gl.integrate(double(i) / kCells, double(i + 1) / kCells);
  }
  double total() const { return cumulative[kCells]; }
};

const ReparamTable& reparam_table() {
  static const ReparamTable table;
  return table;
}

}  // namespace

double flat_reparam(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const auto& tab = reparam_table();
  const int cell = std::min(ReparamTable::kCells - 1, static_cast<int>(u * ReparamTable::kCells));
  const double left = double(cell) / ReparamTable::kCells;
  return (tab.cumulative[cell] + tab.gl.integrate(left, u)) / tab.total();
}

double flat_reparam_derivative(double u) { return bump(u) / reparam_table().total(); }

FamilyPtr constant_family(const CMat& g) { return std::make_shared<ConstantFamily>(g); }
FamilyPtr exp_family(std::vector<ExpTerm> terms) { return std::make_shared<ExpFamily>(std::move(terms)); }
FamilyPtr product_family(FamilyPtr a, FamilyPtr b) { return std::make_shared<ProductFamily>(std::move(a), std::move(b)); }
FamilyPtr inverse_family(FamilyPtr a) { return std::make_shared<InverseFamily>(std::move(a)); }
FamilyPtr block_diag_family(FamilyPtr a, FamilyPtr b) {
  return std::make_shared<BlockDiagFamily>(std::move(a), std::move(b));
}
FamilyPtr concat_family(FamilyPtr a, FamilyPtr b, int var) {
  if (var != kVarT && var != kVarS) throw Error(ErrorCode::Domain, "concat_family: concatenate in t or s only");
  return std::make_shared<ConcatFamily>(std::move(a), std::move(b), var);
}
FamilyPtr fourier_family(std::vector<CMat> coeffs, int kmin) {
  return std::make_shared<FourierFamily>(std::move(coeffs), kmin);
}
FamilyPtr pinned_family(FamilyPtr base, std::optional<double> s, std::optional<std::vector<double>> p) {
  return std::make_shared<PinnedFamily>(std::move(base), s, std::move(p));
}
FamilyPtr lambda_family(Eigen::Index rows, Eigen::Index cols, std::function<CMat(const Coords&)> value,
                        std::function<CMat(const Coords&, int)> partial, LambdaOptions options) {
  return std::make_shared<LambdaFamily>(rows, cols, std::move(value), std::move(partial), options);
}

}  // namespace lchern
