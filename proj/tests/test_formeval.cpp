#include "doctest.h"

#include <cmath>
#include <vector>

#include "lchern/formeval.hpp"
#include "lchern/verifysuite.hpp"

using namespace lchern;

namespace {

double max_abs(const CMat& m) { return m.cwiseAbs().maxCoeff(); }

SlotSequence word(std::vector<Slot> slots, TimeMode time = TimeMode::Simplex) {
  SlotSequence s;
  s.slots = std::move(slots);
  s.time = time;
  return s;
}

double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace

TEST_SUITE("formeval") {

TEST_CASE("slot kinds") {
  for (SlotKind k : {SlotKind::Contract, SlotKind::OneForm, SlotKind::TwoForm, SlotKind::SDerivOneForm,
                     SlotKind::SDerivTwoForm})
    CHECK(parse_slot_kind(to_string(k)) == k);
  CHECK(default_degree(SlotKind::Contract) == 0);
  CHECK(default_degree(SlotKind::SDerivOneForm) == 1);
  CHECK(default_degree(SlotKind::TwoForm) == 2);
  CHECK(Slot(SlotKind::SDerivTwoForm, 1).degree == 1);
  CHECK_THROWS_AS(parse_slot_kind("three-form"), Error);
}

TEST_CASE("shuffles enumerate signed order-preserving distributions") {
  const std::vector<int> d11{1, 1};
  const auto s11 = shuffles(d11);
  REQUIRE(s11.size() == 2);
  int sign_sum = 0;
  for (const auto& s : s11) sign_sum += s.sign;
  CHECK(sign_sum == 0);

  const std::vector<int> d21{2, 1};
  const auto s21 = shuffles(d21);
  CHECK(s21.size() == 3);
  for (const auto& s : s21) CHECK((s.masks[0] | s.masks[1]) == 0b111u);
  // {0,1}|{2} is the identity, {0,2}|{1} one transposition, {1,2}|{0} two.
  for (const auto& s : s21) {
    if (s.masks[1] == 0b100u) CHECK(s.sign == 1);
    if (s.masks[1] == 0b010u) CHECK(s.sign == -1);
    if (s.masks[1] == 0b001u) CHECK(s.sign == 1);
  }
  const std::vector<int> d111{1, 1, 1};
  CHECK(shuffles(d111).size() == 6);
  const std::vector<int> d0{0, 1, 0};
  CHECK(shuffles(d0).size() == 1);
}

TEST_CASE("iterated integrals of constants and monomials") {
  const QuadratureSpec q;
  const CMat a = random_anti_hermitian(2, 1, 1.0), b = random_anti_hermitian(2, 2, 1.0);
  std::vector<std::function<CMat(double)>> ab{[&](double) { return a; }, [&](double) { return b; }};
  CHECK(max_abs(iterated_integral(ab, q, 2) - 0.5 * a * b) <= 1e-14);
  std::vector<std::function<CMat(double)>> ones(5, [](double) { return CMat(identity(1)); });
  CHECK(std::abs(iterated_integral(ones, q, 1)(0, 0) - 1.0 / 120.0) <= 1e-10);
  // ∫_{t₁<t₂} t₁ = 1/6
  std::vector<std::function<CMat(double)>> mono{[](double t) { return CMat::Constant(1, 1, t); },
                                                [](double) { return CMat(identity(1)); }};
  CHECK(std::abs(iterated_integral(mono, q, 1)(0, 0) - 1.0 / 6.0) <= 1e-14);
  CHECK(max_abs(iterated_integral({}, q, 3) - identity(3)) == 0.0);
}

TEST_CASE("contraction words on an exp loop") {
  const CMat x = winding_generator(std::vector<int>{1, -2});
  const UnitaryLoop g = exp_loop(x, random_unitary(2, 3));
  const QuadratureSpec q;
  CMat xn = identity(2);
  for (int n = 1; n <= 5; ++n) {
    xn = xn * x;
    const SlotSequence w = word(std::vector<Slot>(static_cast<std::size_t>(n), Slot(SlotKind::Contract)));
    const Complex expect = trace(xn) / factorial(n);
    CHECK(std::abs(eval_slot_sequence(g, w, {}, q) - expect) <= 1e-8 * std::max(1.0, std::abs(expect)));
  }
}

TEST_CASE("one-form words on time-dependent fields") {
  const UnitaryLoop g = exp_loop(winding_generator(std::vector<int>{1, 0}));
  const CMat a = random_anti_hermitian(2, 4, 1.0), b = random_anti_hermitian(2, 5, 1.0);
  const std::vector<TangentField> vw{left_translated_field(g, [a](double t) { return CMat(t * a); }),
                                     left_translated_field(g, [b](double) { return b; })};
  const QuadratureSpec q;
  // ∫_{t₁<t₂} t₁ Tr(ab) − ∫_{t₁<t₂} t₂ Tr(ba) = −Tr(ab)/6
  const Complex v = eval_slot_sequence(g, word({SlotKind::OneForm, SlotKind::OneForm}), vw, q);
  CHECK(std::abs(v + trace(CMat(a * b)) / 6.0) <= 1e-13);
  // Pointwise [TwoForm] is Tr[ξ, η] = 0 and [Contract, OneForm] is ∫ Tr(X ξ).
  CHECK(std::abs(eval_slot_sequence(g, word({SlotKind::TwoForm}, TimeMode::Pointwise), vw, q)) <= 1e-14);
  const std::vector<TangentField> one{vw[0]};
  const CMat x = winding_generator(std::vector<int>{1, 0});
  const Complex pc = eval_slot_sequence(g, word({SlotKind::Contract, SlotKind::OneForm}, TimeMode::Pointwise), one, q);
  CHECK(std::abs(pc - 0.5 * trace(CMat(x * a))) <= 1e-13);
}

TEST_CASE("alternation and multilinearity of evaluated words") {
  const UnitaryLoop g = exp_loop(winding_generator(std::vector<int>{1, -1}), random_unitary(2, 2));
  const auto f = random_fourier_fields(g, 4, 8);
  const SlotSequence w = word({SlotKind::OneForm, SlotKind::Contract, SlotKind::TwoForm});
  QuadratureSpec q;
  q.grid_t = 64;
  const std::vector<TangentField> abc{f[0], f[1], f[2]}, bac{f[1], f[0], f[2]}, acb{f[0], f[2], f[1]};
  const Complex v = eval_slot_sequence(g, w, abc, q);
  CHECK(std::abs(v) > 1e-6);
  CHECK(std::abs(eval_slot_sequence(g, w, bac, q) + v) <= 1e-12 * std::abs(v));
  CHECK(std::abs(eval_slot_sequence(g, w, acb, q) + v) <= 1e-12 * std::abs(v));
  const Complex lambda(0.7, -1.3);
  const std::vector<TangentField> scaled{f[0], scaled_field(f[1], lambda), f[2]};
  CHECK(std::abs(eval_slot_sequence(g, w, scaled, q) - lambda * v) <= 1e-12 * std::abs(v));
  const std::vector<TangentField> summed{sum_field(f[0], f[3]), f[1], f[2]}, other{f[3], f[1], f[2]};
  CHECK(std::abs(eval_slot_sequence(g, w, summed, q) - v - eval_slot_sequence(g, w, other, q)) <= 1e-12 * std::abs(v));
}

TEST_CASE("arity mismatch is rejected") {
  const UnitaryLoop g = exp_loop(winding_generator(std::vector<int>{1}));
  const std::vector<TangentField> none;
  CHECK_THROWS_AS(eval_slot_sequence(g, word({SlotKind::OneForm}), none, QuadratureSpec{}), Error);
}

TEST_CASE("Monte-Carlo simplex estimates bracket the deterministic value") {
  const UnitaryLoop g = exp_loop(winding_generator(std::vector<int>{1, -1}), random_unitary(2, 9));
  const std::vector<TangentField> v{fourier_left_field(g, {random_anti_hermitian(2, 6, 1.0)},
                                                       {random_anti_hermitian(2, 7, 1.0)})};
  const std::vector<SlotSequence> terms{word({SlotKind::Contract, SlotKind::OneForm, SlotKind::Contract})};
  MaurerCartanBinding binding(g, v);
  QuadratureSpec q;
  const EvalResult det = evaluate_terms(terms, binding, q);
  q.mc_samples = 20000;
  q.seed = 5;
  const EvalResult mc = evaluate_terms(terms, binding, q);
  CHECK(mc.std_error > 0.0);
  CHECK(std::abs(mc.value - det.value) <= 5.0 * mc.std_error + 1e-12);
  const EvalResult again = evaluate_terms(terms, binding, q);
  CHECK(again.value == mc.value);
}

TEST_CASE("finite-difference exterior derivative") {
  // α = p₀²p₁ (a 0-form); dα₍₀₎ = 2p₀p₁.
  PlotComponent f = [](std::span<const double> p, std::span<const int>) { return Complex(p[0] * p[0] * p[1]); };
  const std::vector<double> p{0.3, -0.7};
  const std::vector<int> i0{0};
  CHECK(std::abs(fd_exterior_derivative(f, p, i0, 1e-3) - 2.0 * 0.3 * -0.7) <= 1e-9);
  // An exact 1-form α_j = ∂_j(p₀²p₁) has dα = 0.
  PlotComponent exact = [](std::span<const double> x, std::span<const int> j) {
    return Complex(j[0] == 0 ? 2 * x[0] * x[1] : x[0] * x[0]);
  };
  const std::vector<int> i01{0, 1};
  CHECK(std::abs(fd_exterior_derivative(exact, p, i01, 1e-3)) <= 1e-9);
  Box box{{-1.0, -1.0}, {0.3005, 1.0}};
  CHECK_THROWS_AS(fd_exterior_derivative(f, p, i0, 1e-3, &box), Error);
}

}  // TEST_SUITE
