#include <doctest.h>

#include <cmath>
#include <random>

#include "osclab/error.hpp"
#include "test_util.hpp"
#include "osclab/phase.hpp"
#include "osclab/resolution.hpp"

using namespace osc;

namespace {

Phase lit(const char* s) { return Phase::from_literal(s); }

ShearMap shear_of(std::vector<ShearTerm> psi, int sign = 1) { return make_shear(sign, std::move(psi)); }

}  // namespace

TEST_CASE("shears compose exactly for integer exponents") {
  ShearedPhase a = apply_shear(lit("[[0,2,1,1],[2,1,-2,1],[4,0,1,1]]"), shear_of({{Rational(2), 1.0}}));
  REQUIRE(a.exact.has_value());
  REQUIRE(a.exact->terms().size() == 1);
  CHECK(a.exact->terms()[0].alpha == 0);
  CHECK(a.exact->terms()[0].beta == 2);

  ShearedPhase b = apply_shear(lit("[[0,2,1,1],[3,1,-2,1]]"), shear_of({{Rational(3), 1.0}}));
  REQUIRE(b.exact.has_value());
  REQUIRE(b.exact->terms().size() == 2);
  for (double x : {0.3, -0.7}) {
    for (double y : {0.2, 0.9}) CHECK(b.eval(x, y) == doctest::Approx(y * y - std::pow(x, 6)).epsilon(1e-13));
  }

  Phase s = lit("[[3,1,2,1],[0,5,1,3]]");
  ShearedPhase id = apply_shear(s, shear_of({}));
  for (double x : {0.1, 0.5}) CHECK(id.eval(x, 0.3) == s.eval(x, 0.3));
}

TEST_CASE("fractional shears are evaluated for positive x only") {
  ShearedPhase f = apply_shear(lit("[[0,2,1,1]]"), shear_of({{Rational(3, 2), 1.0}}));
  CHECK_FALSE(f.exact.has_value());
  CHECK(f.positive_x_only);
  CHECK(f.eval(0.25, 0.0) == doctest::Approx(std::pow(0.25, 3.0)).epsilon(1e-13));
  CHECK(std::isnan(f.eval(-0.25, 0.0)));
}

TEST_CASE("shear validation") {
  CHECK(code_of([] { make_shear(2, {}); }) == ErrorCode::validation);
  CHECK(code_of([] { make_shear(1, {{Rational(1, 2), 1.0}}); }) == ErrorCode::validation);
  CHECK(code_of([] { make_shear(1, {{Rational(3), 1.0}, {Rational(2), 1.0}}); }) == ErrorCode::validation);
  CHECK(code_of([] { make_shear(1, {{Rational(65, 64), 1.0}, {Rational(66, 65), 1.0}}); }) == ErrorCode::validation);
}

TEST_CASE("inverse shear recovers the phase") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Phase s = lit("[[3,0,1,1],[1,1,1,1],[0,3,2,1],[2,2,-1,3]]");
  for (int sign : {1, -1}) {
    ShearMap m = shear_of({{Rational(1), 0.7}, {Rational(3), -1.3}}, sign);
    ShearedPhase fwd = apply_shear(s, m);
    REQUIRE(fwd.exact.has_value());
    ShearedPhase back = apply_shear(*fwd.exact, inverse_shear(m));
    for (int k = 0; k < 50; ++k) {
      const double x = u(rng), y = u(rng);
      const double expect = s.eval(x, y);
      CHECK(std::abs(back.eval(x, y) - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
    }
  }
}

TEST_CASE("wedge validation") {
  CHECK(code_of([] { make_wedge(0.0, {1.0, Rational(1)}); }) == ErrorCode::validation);
  CHECK(code_of([] { make_wedge(0.5, {1.0, Rational(1, 2)}); }) == ErrorCode::validation);
  CHECK(code_of([] { make_wedge(0.5, {1.0, Rational(2)}, WedgeBound{1.0, Rational(2)}); }) == ErrorCode::validation);
  Wedge w = make_wedge(0.5, {1.0, Rational(2)}, WedgeBound{0.5, Rational(3)});
  CHECK(w.lower->at(0.25) < w.upper.at(0.25));
}

TEST_CASE("comparability of worked examples") {
  ComparabilityOptions opt;
  opt.l_max = 2;
  MonomializationReport a = check_comparability(apply_shear(lit("[[3,0,1,1]]"), shear_of({})),
                                                make_wedge(0.5, {1.0, Rational(2)}), Rational(3), 0, opt);
  CHECK(a.pass);
  REQUIRE(a.orders.size() == 3);
  const double falling[] = {1, 3, 6};
  for (const auto& o : a.orders) {
    CHECK(o.ratio_min == doctest::Approx(falling[o.l]).epsilon(1e-10));
    CHECK(o.ratio_max == doctest::Approx(falling[o.l]).epsilon(1e-10));
  }

  ComparabilityOptions o0;
  MonomializationReport b = check_comparability(apply_shear(lit("[[3,0,1,1],[0,3,1,1]]"), shear_of({})),
                                                make_wedge(0.5, {0.5, Rational(1)}), Rational(3), 0, o0);
  CHECK(b.pass);
  CHECK(b.orders[0].ratio_min >= 1.0);
  CHECK(b.orders[0].ratio_max <= 1.125);

  MonomializationReport c = check_comparability(apply_shear(lit("[[0,2,1,1],[2,1,-2,1],[4,0,1,1]]"), shear_of({{Rational(2), 1.0}})),
                                                make_wedge(0.5, {1.0, Rational(3)}), Rational(0), 2, o0);
  CHECK(c.pass);
  CHECK(c.orders[0].ratio_max - c.orders[0].ratio_min < 1e-10);
}

TEST_CASE("comparability rejects a wrong monomial") {
  MonomializationReport r = check_comparability(apply_shear(lit("[[3,0,1,1],[0,3,1,1]]"), shear_of({})),
                                                make_wedge(0.5, {0.5, Rational(1)}), Rational(2), 0, {});
  CHECK_FALSE(r.pass);
}

TEST_CASE("exact monomials have negligible spread at every order") {
  ComparabilityOptions opt;
  opt.l_max = 3;
  opt.m_max = 2;
  MonomializationReport r = check_comparability(apply_shear(lit("[[3,2,5,2]]"), shear_of({})),
                                                make_wedge(0.5, {1.0, Rational(2)}), Rational(3), 2, opt);
  CHECK(r.pass);
  CHECK(r.exact_derivatives);
  CHECK(r.d_i == doctest::Approx(2.5).epsilon(1e-12));
  for (const auto& o : r.orders) CHECK((o.ratio_max - o.ratio_min) / std::abs(o.ratio_max) < 1e-10);
}

TEST_CASE("comparability preconditions") {
  auto f = apply_shear(lit("[[3,0,1,1]]"), shear_of({}));
  ComparabilityOptions opt;
  opt.l_max = 4;
  CHECK(code_of([&] { check_comparability(f, make_wedge(0.5, {1.0, Rational(2)}), Rational(3), 0, opt); }) ==
        ErrorCode::validation);
  ComparabilityOptions small;
  small.grid = 8;
  CHECK(code_of([&] { check_comparability(f, make_wedge(0.5, {1.0, Rational(2)}), Rational(3), 0, small); }) ==
        ErrorCode::validation);
}

TEST_CASE("principal parts") {
  PrincipalPart a = principal_part(lit("[[3,0,1,1],[1,1,1,1]]").poly(), Rational(2));
  CHECK(a.alpha_min == Rational(3));
  CHECK(a.r.terms().size() == 2);
  CHECK(a.r.eval(0, 2.0) == doctest::Approx(3.0));
  PrincipalPart b = principal_part(lit("[[2,2,1,1]]").poly(), Rational(1));
  CHECK(b.alpha_min == Rational(4));
  REQUIRE(b.r.terms().size() == 1);
  CHECK(b.r.terms()[0].beta == 2);
  PrincipalPart c = principal_part(lit("[[4,0,1,1],[0,2,1,1]]").poly(), Rational(2));
  CHECK(c.alpha_min == Rational(4));
  CHECK(c.r.eval(0, 3.0) == doctest::Approx(10.0));
}

TEST_CASE("principal part is the limit of the rescaled phase") {
  Phase s = lit("[[3,0,1,1],[1,1,1,1],[5,0,1,1],[2,2,1,1]]");
  PrincipalPart pp = principal_part(s.poly(), Rational(2));
  for (double y : {0.2, 0.7}) {
    double prev = 1e9;
    for (double x : {1e-2, 1e-3, 1e-4}) {
      const double v = s.eval(x, x * x * y) / std::pow(x, 3);
      const double err = std::abs(v - pp.r.eval(0, y));
      CHECK(err < prev);
      prev = err;
    }
    CHECK(prev < 1e-7);
  }
}

TEST_CASE("principal part residual checks") {
  Wedge w = make_wedge(0.5, {1.0, Rational(2)});
  PrincipalPartOptions opt;
  opt.l_max = 1;
  auto f1 = apply_shear(lit("[[3,0,1,1],[1,1,1,1]]"), shear_of({}));
  PrincipalPartReport a = check_principal_part(f1, w, principal_part(*f1.exact, Rational(2)).r, Rational(3), opt);
  CHECK(a.pass);
  CHECK(a.orders[0].zero_residual);

  auto f2 = apply_shear(lit("[[3,0,1,1],[1,1,1,1],[5,0,1,1]]"), shear_of({}));
  PrincipalPartReport b = check_principal_part(f2, w, principal_part(*f2.exact, Rational(2)).r, Rational(3), opt);
  CHECK(b.pass);
  CHECK(b.orders[0].fitted_exponent == doctest::Approx(5.0).epsilon(0.01));
  CHECK(b.delta_est == doctest::Approx(2.0).epsilon(0.01));

  auto f3 = apply_shear(lit("[[2,2,1,1]]"), shear_of({}));
  PrincipalPartReport c = check_principal_part(f3, make_wedge(0.5, {1.0, Rational(1)}), principal_part(*f3.exact, Rational(1)).r,
                                               Rational(4), {});
  CHECK(c.pass);

  // r(y) = 1 - y vanishes at y = 1 inside [0, H] with H = 2.
  auto f4 = apply_shear(lit("[[3,0,1,1],[1,1,-1,1]]"), shear_of({}));
  CHECK(code_of([&] {
          check_principal_part(f4, make_wedge(0.5, {2.0, Rational(2)}), principal_part(*f4.exact, Rational(2)).r,
                               Rational(3), {});
        }) == ErrorCode::root_in_range);
}
