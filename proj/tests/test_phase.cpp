#include <doctest.h>

#include <cmath>
#include <random>

#include "osclab/error.hpp"
#include "test_util.hpp"
#include "osclab/phase.hpp"
#include "osclab/rational.hpp"

using namespace osc;

namespace {

Phase lit(const char* s) { return Phase::from_literal(s); }

double coeff_of(const Polynomial& p, int a, int b) {
  for (const auto& t : p.terms()) {
    if (t.alpha == a && t.beta == b) return t.coeff;
  }
  return 0.0;
}

}  // namespace

TEST_CASE("rational arithmetic normalizes and orders") {
  Rational a(6, -4);
  CHECK(a.num() == -3);
  CHECK(a.den() == 2);
  CHECK(a + Rational(3, 2) == Rational(0));
  CHECK(Rational(2, 3) * Rational(3, 4) == Rational(1, 2));
  CHECK(Rational(1, 3) / Rational(2) == Rational(1, 6));
  CHECK(Rational(1, 3) < Rational(1, 2));
  CHECK(Rational(7, 3).str() == "7/3");
  CHECK(Rational(4).str() == "4");
}

TEST_CASE("rational overflow is reported") {
  const Rational big(std::int64_t{1} << 62);
  CHECK(code_of([&] { (void)(big * big); }) == ErrorCode::overflow);
}

TEST_CASE("phase evaluation at worked points") {
  CHECK(lit("[[2,0,1,1],[0,2,1,1]]").eval(0, 0) == 0.0);
  CHECK(lit("[[2,2,1,1]]").eval(1, 2) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(lit("[[3,0,1,1],[1,2,-3,1]]").eval(2, 1) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("phase invariants are enforced") {
  CHECK(code_of([] { lit("[[1,0,1,1]]"); }) == ErrorCode::validation);
  CHECK(code_of([] { lit("[]"); }) == ErrorCode::validation);
  CHECK(code_of([] { lit("[[2,0,1,0]]"); }) == ErrorCode::validation);
  CHECK(code_of([] { lit("not json"); }) == ErrorCode::validation);
  CHECK(code_of([] { lit("[[2,0,1,2],[2,0,1,2],[0,3,1,1]]"); }) == ErrorCode::validation);
  Polynomial merged({{2, 0, 0.5, Rational(1, 2)}, {2, 0, 0.5, Rational(1, 2)}, {0, 3, 1.0, Rational(1)}});
  CHECK(merged.terms().size() == 2);
  CHECK(coeff_of(merged, 2, 0) == 1.0);
}

TEST_CASE("literal round trip") {
  Phase p = lit("[[4,0,1,3],[0,2,-2,1],[2,2,5,7]]");
  Phase q = Phase::from_literal(p.to_literal());
  CHECK(q.to_literal() == p.to_literal());
  CHECK(format_polynomial(lit("[[2,2,1,1]]").poly()) == "x^2*y^2");
}

TEST_CASE("partial derivatives") {
  Polynomial d = partial_derivative(lit("[[2,2,1,1]]").poly(), 0, 1);
  REQUIRE(d.terms().size() == 1);
  CHECK(d.terms()[0].alpha == 2);
  CHECK(d.terms()[0].beta == 1);
  CHECK(d.terms()[0].coeff == 2.0);
  Polynomial c = partial_derivative(lit("[[2,0,1,1],[0,2,1,1]]").poly(), 2, 0);
  REQUIRE(c.terms().size() == 1);
  CHECK(c.terms()[0].alpha == 0);
  CHECK(c.terms()[0].beta == 0);
  CHECK(c.terms()[0].coeff == 2.0);
  Phase s = lit("[[3,1,2,1],[0,5,1,3]]");
  CHECK(partial_derivative(s.poly(), 0, 0).terms().size() == s.terms().size());
  CHECK(partial_derivative(s.poly(), 4, 0).empty());
}

TEST_CASE("derivative agrees with central differences on random points") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Phase phases[] = {lit("[[2,0,1,1],[0,2,1,1]]"), lit("[[3,1,2,1],[0,5,1,3],[2,3,-1,2]]"), lit("[[6,6,1,1]]")};
  for (const auto& s : phases) {
    Polynomial dx = partial_derivative(s.poly(), 1, 0);
    for (int k = 0; k < 100; ++k) {
      const double x = u(rng), y = u(rng);
      const double h = 1e-5;
      const double fd = (s.eval(x + h, y) - s.eval(x - h, y)) / (2 * h);
      const double ex = dx.eval(x, y);
      CHECK(std::abs(fd - ex) <= 1e-6 * std::max(1.0, std::abs(ex)));
    }
  }
}

TEST_CASE("order of zero") {
  CHECK(order_of_zero(lit("[[2,0,1,1],[0,2,1,1]]").poly()) == 2);
  CHECK(order_of_zero(lit("[[2,2,1,1]]").poly()) == 4);
  CHECK(order_of_zero(lit("[[3,0,1,1],[0,5,1,1]]").poly()) == 3);
}

TEST_CASE("linear changes") {
  const double c = std::sqrt(0.5);
  Phase r = linear_change(lit("[[1,1,1,1]]"), {c, -c, c, c});
  CHECK(coeff_of(r.poly(), 2, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(coeff_of(r.poly(), 0, 2) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(std::abs(coeff_of(r.poly(), 1, 1)) < 1e-14);

  Phase s = lit("[[3,1,2,1],[0,5,1,3]]");
  CHECK(linear_change(s, {1, 0, 0, 1}).to_literal() == s.to_literal());

  Phase w = linear_change(lit("[[2,0,1,1]]"), {0, 1, 1, 0});
  REQUIRE(w.terms().size() == 1);
  CHECK(w.terms()[0].alpha == 0);
  CHECK(w.terms()[0].beta == 2);

  CHECK(code_of([&] { linear_change(s, {1, 2, 2, 4}); }) == ErrorCode::singular_matrix);
}

TEST_CASE("order of zero is invariant under invertible changes") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const Phase phases[] = {lit("[[2,2,1,1]]"), lit("[[3,0,1,1],[0,3,1,1]]"), lit("[[4,0,1,1],[0,2,1,1]]")};
  for (const auto& s : phases) {
    for (int k = 0; k < 10; ++k) {
      std::array<double, 4> a{u(rng), u(rng), u(rng), u(rng)};
      if (std::abs(a[0] * a[3] - a[1] * a[2]) < 0.1) continue;
      CHECK(order_of_zero(linear_change(s, a).poly()) == order_of_zero(s.poly()));
    }
  }
}
