#include "doctest.h"

#include <cmath>

#include "lchern/matrixcore.hpp"
#include "lchern/verifysuite.hpp"

using namespace lchern;

namespace {

double max_abs(const CMat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("matrixcore") {

TEST_CASE("expm of a diagonal generator is the elementwise exponential") {
  CMat x = CMat::Zero(3, 3);
  x(0, 0) = Complex(0.0, 0.7);
  x(1, 1) = Complex(-1.5, 2.0);
  x(2, 2) = Complex(40.0, -30.0);  // forces many squarings
  const CMat e = expm(x);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(e(i, i) - std::exp(x(i, i))) <= 1e-13 * std::abs(std::exp(x(i, i))));
  CHECK(std::abs(e(0, 1)) == 0.0);
}

TEST_CASE("expm of a nilpotent and of a rotation generator") {
  CMat n = CMat::Zero(2, 2);
  n(0, 1) = 3.0;
  const CMat en = expm(n);
  CHECK(max_abs(en - (identity(2) + n)) <= 1e-15);

  const double a = 2.3;
  CMat r = CMat::Zero(2, 2);
  r(0, 1) = -a;
  r(1, 0) = a;
  CMat expect(2, 2);
  expect << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  CHECK(max_abs(expm(r) - expect) <= 1e-14);
}

TEST_CASE("exponentials of anti-Hermitian matrices are unitary") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const CMat x = random_anti_hermitian(4, seed, 3.0);
    CHECK(is_anti_hermitian(x));
    const CMat g = expm(x);
    CHECK(unitarity_defect(g) <= 1e-13);
    CHECK(max_abs(g * expm(-x) - identity(4)) <= 1e-13);
  }
}

TEST_CASE("expm_frechet matches central differences and the commuting case") {
  const CMat x = random_anti_hermitian(3, 7, 1.0);
  const CMat e = random_anti_hermitian(3, 8, 1.0);
  const double h = 1e-5;
  const CMat fd = (expm(x + h * e) - expm(x - h * e)) / (2.0 * h);
  CHECK(max_abs(expm_frechet(x, e) - fd) <= 1e-8);
  CHECK(max_abs(expm_frechet(x, x) - x * expm(x)) <= 1e-13);
}

TEST_CASE("path_ordered_exp: constant and conjugated generators") {
  const CMat a = random_anti_hermitian(2, 3, 1.5);
  const CMat k = random_anti_hermitian(2, 4, 1.0);
  CHECK(max_abs(path_ordered_exp([&](double) { return a; }, 2000) - expm(a)) <= 1e-11);
  // h(t) = e^{t(A+K)}e^{−tK} solves h′ = h·e^{tK}Ae^{−tK}.
  const CMat h = path_ordered_exp([&](double t) { return CMat(expm(t * k) * a * expm(-t * k)); }, 2000);
  CHECK(max_abs(h - expm(a + k) * expm(-k)) <= 1e-11);
}

TEST_CASE("block_diag, pad_identity, norms and trace") {
  CMat a(1, 1);
  a(0, 0) = Complex(0.0, 1.0);
  const CMat b = random_unitary(2, 5);
  const CMat s = block_diag(a, b);
  CHECK(s.rows() == 3);
  CHECK(s(0, 0) == a(0, 0));
  CHECK(max_abs(s.bottomRightCorner(2, 2) - b) == 0.0);
  CHECK(std::abs(s(0, 1)) == 0.0);
  CHECK(std::abs(trace(s) - (a(0, 0) + trace(b))) <= 1e-15);

  const CMat p = pad_identity(b, 4);
  CHECK(max_abs(p.bottomRightCorner(2, 2) - identity(2)) == 0.0);
  CHECK_THROWS_AS(pad_identity(b, 1), Error);

  CMat m(2, 2);
  m << 1.0, -2.0, 3.0, 4.0;
  CHECK(norm1(m) == doctest::Approx(6.0));
  CHECK(norm2(b) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unitarity predicates and errors") {
  CMat g = random_unitary(3, 9);
  CHECK(is_unitary(g));
  g(0, 0) += 1e-3;
  CHECK_FALSE(is_unitary(g));
  CHECK(unitarity_defect(g) > 1e-4);
  CMat nan = identity(2);
  nan(1, 0) = Complex(std::nan(""), 0.0);
  CHECK_FALSE(all_finite(nan));
  CHECK_THROWS_AS(expm(CMat::Zero(2, 3)), Error);
}

TEST_CASE("random generators are deterministic in the seed") {
  CHECK(max_abs(random_anti_hermitian(3, 42) - random_anti_hermitian(3, 42)) == 0.0);
  CHECK(max_abs(random_anti_hermitian(3, 42) - random_anti_hermitian(3, 43)) > 0.0);
}

}  // TEST_SUITE
