#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "lchern/parallel.hpp"
#include "lchern/quadrature.hpp"

using namespace lchern;

namespace {

double integrate(int intervals, QuadratureRule rule, double (*f)(double)) {
  const auto w = rule_weights(intervals, rule);
  double acc = 0.0;
  for (int i = 0; i <= intervals; ++i) acc += w[static_cast<std::size_t>(i)] * f(static_cast<double>(i) / intervals);
  return acc;
}

double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace

TEST_SUITE("quadrature") {

TEST_CASE("weights sum to one and Simpson is exact for cubics") {
  for (int m : {2, 8, 64}) {
    for (auto rule : {QuadratureRule::Trapezoid, QuadratureRule::Simpson}) {
      const auto w = rule_weights(m, rule);
      double sum = 0.0;
      for (double x : w) sum += x;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK(integrate(m, QuadratureRule::Simpson, [](double x) { return x * x * x - 2.0 * x + 1.0; }) ==
          doctest::Approx(0.25).epsilon(1e-14));
  }
}

TEST_CASE("convergence orders: trapezoid 2, Simpson 4") {
  auto f = [](double x) { return std::exp(std::sin(3.0 * x)); };
  const double ref = integrate(1 << 14, QuadratureRule::Simpson, f);
  auto order = [&](QuadratureRule rule) {
    const double e1 = std::abs(integrate(32, rule, f) - ref);
    const double e2 = std::abs(integrate(64, rule, f) - ref);
    return std::log2(e1 / e2);
  };
  CHECK(order(QuadratureRule::Trapezoid) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(order(QuadratureRule::Simpson) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("beta identity on the s grid") {
  // ∫₀¹ sᵏ(1−s)ˡ ds = k!l!/(k+l+1)!
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
      worst = std::max(worst, std::abs(acc - factorial(k) * factorial(l) / factorial(k + l + 1)));
    }
  CHECK(worst <= 1e-10);
}

TEST_CASE("cumulative integral reproduces antiderivatives") {
  const int m = 64;
  std::vector<Complex> f(m + 1), out(m + 1);
  for (int i = 0; i <= m; ++i) {
    const double t = static_cast<double>(i) / m;
    f[static_cast<std::size_t>(i)] = Complex(t * t * t, -2.0 * t);
  }
  cumulative_integral(f, out, QuadratureRule::Simpson);
  for (int i = 0; i <= m; ++i) {
    const double t = static_cast<double>(i) / m;
    const Complex expect(std::pow(t, 4) / 4.0, -t * t);
    // even nodes are full Simpson panels; the half-panel rule is exact to quadratics
    CHECK(std::abs(out[static_cast<std::size_t>(i)] - expect) <= (i % 2 == 0 ? 1e-14 : 1e-7));
  }
  cumulative_integral(f, out, QuadratureRule::Trapezoid);
  CHECK(std::abs(out.back() - Complex(0.25, -1.0)) <= 1e-3);
  std::vector<Complex> short_out(3);
  CHECK_THROWS_AS(cumulative_integral(f, short_out, QuadratureRule::Simpson), Error);
}

TEST_CASE("QuadratureSpec validation") {
  QuadratureSpec q;
  CHECK_NOTHROW(q.validate());
  q.grid_t = 7;
  CHECK_THROWS_AS(q.validate(), Error);
  q.grid_t = 10;
  q.grid_s = 3;
  CHECK_THROWS_AS(q.validate(), Error);
  q.rule = QuadratureRule::Trapezoid;
  CHECK_NOTHROW(q.validate());
  CHECK(parse_rule("simpson") == QuadratureRule::Simpson);
  CHECK(to_string(QuadratureRule::Trapezoid) == "trapezoid");
  CHECK_THROWS_AS(parse_rule("gauss"), Error);
}

TEST_CASE("counter-based uniforms") {
  CHECK(uniform01(1, 2, 3) == uniform01(1, 2, 3));
  std::set<double> seen;
  double mean = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = uniform01(7, 0, static_cast<std::uint64_t>(i));
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    seen.insert(u);
    mean += u / n;
  }
  CHECK(seen.size() == static_cast<std::size_t>(n));
  CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
  CHECK(uniform01(7, 0, 5) != uniform01(7, 1, 5));
  CHECK(uniform01(7, 0, 5) != uniform01(8, 0, 5));
}

TEST_CASE("parallel_for writes every slot once for any worker count") {
  for (int threads : {1, 3, 8}) {
    set_max_threads(threads);
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i] += static_cast<int>(i); });
    for (std::size_t i = 0; i < hits.size(); ++i) CHECK(hits[i] == static_cast<int>(i));
  }
  set_max_threads(1);
}

}  // TEST_SUITE
