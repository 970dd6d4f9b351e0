#include "doctest.h"

#include <cmath>
#include <vector>

#include "lchern/family.hpp"
#include "lchern/verifysuite.hpp"

using namespace lchern;

namespace {

double max_abs(const CMat& m) { return m.cwiseAbs().maxCoeff(); }

// Largest gap between the jet derivatives and central differences.
double jet_gap(const FamilyPtr& f, Coords c, const std::vector<int>& vars, double h = 1e-4) {
  const Jet jet = f->eval(c, vars);
  double worst = 0.0;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    auto shifted = [&](double d) {
      Coords x = c;
      x.set(vars[i], c.get(vars[i]) + d);
      return f->value(x);
    };
    // five-point stencil
    const CMat fd = (8.0 * (shifted(h) - shifted(-h)) - (shifted(2 * h) - shifted(-2 * h))) / (12.0 * h);
    worst = std::max(worst, max_abs(jet.d[i] - fd));
  }
  return worst;
}

Coords at(double t, double s, std::vector<double> p) {
  Coords c;
  c.t = t;
  c.s = s;
  c.p = std::move(p);
  return c;
}

FamilyPtr sample_family() {
  const CMat a = random_anti_hermitian(2, 1, 1.0), b = random_anti_hermitian(2, 2, 1.0);
  return exp_family({{scalar_var(kVarT), a},
                     {scalar_product(scalar_var(kVarS), scalar_var(var_p(0))), b},
                     {scalar_sin2pi_t(2), random_anti_hermitian(2, 3, 0.5)}});
}

}  // namespace

TEST_SUITE("family") {

TEST_CASE("flat reparametrizer") {
  CHECK(flat_reparam(0.0) == 0.0);
  CHECK(flat_reparam(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(flat_reparam(0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(flat_reparam_derivative(0.0) == 0.0);
  CHECK(flat_reparam_derivative(1.0) == 0.0);
  double prev = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double u = i / 100.0;
    CHECK(flat_reparam(u) >= prev);
    prev = flat_reparam(u);
    CHECK(flat_reparam(u) + flat_reparam(1.0 - u) == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (double u : {0.1, 0.3, 0.77}) {
    const double h = 1e-6;
    CHECK(flat_reparam_derivative(u) ==
          doctest::Approx((flat_reparam(u + h) - flat_reparam(u - h)) / (2 * h)).epsilon(1e-7));
  }
}

TEST_CASE("exp_family jets agree with finite differences") {
  const FamilyPtr f = sample_family();
  CHECK(jet_gap(f, at(0.3, 0.4, {0.7}), {kVarT, kVarS, var_p(0)}) <= 1e-8);
}

TEST_CASE("composite nodes propagate exact derivatives") {
  const FamilyPtr f = sample_family();
  const FamilyPtr g = exp_family({{scalar_cos2pi_t(1), random_anti_hermitian(2, 5, 1.0)},
                                  {scalar_var(var_p(0)), random_anti_hermitian(2, 6, 1.0)}});
  const std::vector<int> vars{kVarT, kVarS, var_p(0)};
  const Coords c = at(0.41, 0.25, {0.3});
  CHECK(jet_gap(product_family(f, g), c, vars) <= 1e-8);
  CHECK(jet_gap(inverse_family(f), c, vars) <= 1e-8);
  CHECK(jet_gap(block_diag_family(f, g), c, vars) <= 1e-8);
  CHECK(jet_gap(concat_family(f, g, kVarT), at(0.2, 0.3, {0.1}), vars) <= 1e-7);
  CHECK(jet_gap(concat_family(f, g, kVarT), at(0.8, 0.3, {0.1}), vars) <= 1e-7);
  CHECK(jet_gap(concat_family(f, g, kVarS), at(0.3, 0.7, {0.1}), vars) <= 1e-7);
  CHECK(max_abs(inverse_family(f)->value(c) * f->value(c) - identity(2)) <= 1e-13);
}

TEST_CASE("concat runs each half through the reparametrizer") {
  const FamilyPtr f = sample_family();
  const FamilyPtr g = inverse_family(sample_family());
  const FamilyPtr cat = concat_family(f, g, kVarT);
  CHECK(max_abs(cat->value(at(0.25, 0.1, {0.2})) - f->value(at(flat_reparam(0.5), 0.1, {0.2}))) <= 1e-14);
  CHECK(max_abs(cat->value(at(0.75, 0.1, {0.2})) - g->value(at(flat_reparam(0.5), 0.1, {0.2}))) <= 1e-14);
  CHECK(max_abs(cat->partial(at(0.5, 0.1, {0.2}), kVarT)) <= 1e-12);
}

TEST_CASE("block sums and shapes") {
  const FamilyPtr a = constant_family(random_unitary(2, 1));
  const FamilyPtr b = constant_family(random_unitary(3, 2));
  const FamilyPtr s = block_diag_family(a, b);
  CHECK(s->rows() == 5);
  CHECK(max_abs(s->value({}).topRightCorner(2, 3)) == 0.0);
  CHECK_THROWS_AS(product_family(a, b), Error);
  CHECK_THROWS_AS(concat_family(a, b), Error);
  CHECK_THROWS_AS(concat_family(a, a, var_p(0)), Error);
}

TEST_CASE("pinned families freeze variables") {
  const FamilyPtr f = sample_family();
  const FamilyPtr pin = pinned_family(f, 0.5, std::vector<double>{0.2});
  const Coords c = at(0.3, 0.9, {1.7});
  CHECK(max_abs(pin->value(c) - f->value(at(0.3, 0.5, {0.2}))) <= 1e-15);
  CHECK(max_abs(pin->partial(c, kVarS)) == 0.0);
  CHECK(max_abs(pin->partial(c, var_p(0))) == 0.0);
  CHECK(max_abs(pin->partial(c, kVarT) - f->partial(at(0.3, 0.5, {0.2}), kVarT)) <= 1e-14);
}

TEST_CASE("lambda families fall back to central differences") {
  const CMat a = random_anti_hermitian(2, 11, 1.0);
  auto value = [a](const Coords& c) { return CMat(expm(c.t * c.t * a)); };
  LambdaOptions opt;
  opt.richardson = true;
  const FamilyPtr f = lambda_family(2, 2, value, {}, opt);
  const CMat exact = 2.0 * 0.4 * a * expm(0.16 * a);
  CHECK(max_abs(f->partial(at(0.4, 0.0, {}), kVarT) - exact) <= 1e-9);
}

TEST_CASE("fourier family") {
  CMat c0 = CMat::Zero(1, 1), c1 = CMat::Zero(1, 1);
  c1(0, 0) = 1.0;
  const FamilyPtr f = fourier_family({c0, c1}, 0);
  const Coords c = at(0.125, 0.0, {});
  CHECK(std::abs(f->value(c)(0, 0) - std::exp(kI * (2.0 * kPi * 0.125))) <= 1e-15);
  CHECK(jet_gap(f, c, {kVarT}) <= 1e-8);
}

}  // TEST_SUITE
