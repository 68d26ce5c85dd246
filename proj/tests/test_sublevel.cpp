#include <doctest.h>

#include <cmath>

#include "osclab/numeric.hpp"
#include "osclab/phase.hpp"
#include "osclab/sublevel.hpp"

using namespace osc;

namespace {

const SublevelRegion kSquare = SublevelRegion::rectangle(0, 1, 0, 1);

std::vector<SublevelEstimate> exact_samples(int a, int b, const std::vector<double>& rs) {
  std::vector<SublevelEstimate> v;
  for (double r : rs) v.push_back({r, monomial_sublevel_exact(a, b, r), 0.0, SublevelMethod::adaptive, 0, 0});
  return v;
}

}  // namespace

TEST_CASE("closed forms") {
  CHECK(monomial_sublevel_exact(1, 0, 0.3) == doctest::Approx(0.3));
  CHECK(monomial_sublevel_exact(2, 0, 0.09) == doctest::Approx(0.3));
  CHECK(monomial_sublevel_exact(0, 2, 0.09) == doctest::Approx(0.3));
  for (double r : {0.5, 1e-3, 1e-6}) {
    CHECK(monomial_sublevel_exact(1, 1, r) == doctest::Approx(r - r * std::log(r)).epsilon(1e-14));
    const double s = std::sqrt(r);
    CHECK(monomial_sublevel_exact(2, 2, r) == doctest::Approx(s - s * std::log(s)).epsilon(1e-14));
  }
  // x y^2 < r: integral over x of min(1, sqrt(r/x)).
  const double r = 1e-2;
  CHECK(monomial_sublevel_exact(1, 2, r) == doctest::Approx(2 * std::sqrt(r) - r).epsilon(1e-12));
}

TEST_CASE("slab measure is exact") {
  SublevelOptions opt;
  opt.rel_tol = 1e-8;
  SublevelEstimate e = measure_sublevel(SublevelFunction::monomial(1, 0), kSquare, 0.3, opt);
  CHECK(std::abs(e.measure - 0.3) <= e.uncertainty);
  CHECK(e.uncertainty < 1e-6);
}

TEST_CASE("adaptive brackets contain the closed forms") {
  for (int a = 0; a <= 3; ++a) {
    for (int b = 0; b <= 3; ++b) {
      if (a + b == 0) continue;
      for (double r : {1e-1, 1e-3}) {
        SublevelEstimate e = measure_sublevel(SublevelFunction::monomial(a, b), kSquare, r);
        CHECK(std::abs(e.measure - monomial_sublevel_exact(a, b, r)) <= e.uncertainty);
        CHECK(e.uncertainty <= 2e-3 * e.measure);
      }
    }
  }
}

TEST_CASE("Monte Carlo agrees with the adaptive bracket") {
  const Polynomial corpus[] = {Phase::from_literal("[[1,1,1,1]]").poly(), Phase::from_literal("[[2,0,1,1],[0,2,1,1]]").poly(),
                               Phase::from_literal("[[3,0,1,1],[0,3,1,1]]").poly()};
  for (const auto& p : corpus) {
    SublevelFunction f = SublevelFunction::from_polynomial(p);
    SublevelEstimate det = measure_sublevel(f, kSquare, 0.05);
    SublevelOptions mc;
    mc.method = SublevelMethod::monte_carlo;
    mc.budget = 1 << 20;
    mc.seed = 42;
    SublevelEstimate e = measure_sublevel(f, kSquare, 0.05, mc);
    const double sigma = e.uncertainty / 2.5758293035489004;
    CHECK(std::abs(e.measure - det.measure) <= 3 * sigma + det.uncertainty);
  }
}

TEST_CASE("Monte Carlo is reproducible across thread counts") {
  SublevelFunction f = SublevelFunction::monomial(1, 1);
  SublevelOptions a;
  a.method = SublevelMethod::monte_carlo;
  a.budget = 300000;
  a.seed = 9;
  SublevelOptions b = a;
  b.threads = 4;
  SublevelEstimate x = measure_sublevel(f, kSquare, 0.1, a), y = measure_sublevel(f, kSquare, 0.1, b);
  CHECK(x.measure == y.measure);
  CHECK(x.uncertainty == y.uncertainty);
  b.seed = 10;
  CHECK(measure_sublevel(f, kSquare, 0.1, b).measure != x.measure);
}

TEST_CASE("wedge regions") {
  // 0 < y < x on the unit square, f = y: measure is r - r^2 / 2.
  SublevelRegion w = SublevelRegion::of_wedge(make_wedge(1.0, {1.0, Rational(1)}));
  SublevelEstimate e = measure_sublevel(SublevelFunction::monomial(0, 1), w, 0.2);
  CHECK(std::abs(e.measure - (0.2 - 0.02)) <= e.uncertainty);
}

TEST_CASE("scans are monotone") {
  auto v = sublevel_scan(SublevelFunction::monomial(2, 1), kSquare, logspace(1e-5, 1e-1, 6));
  for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i].measure >= v[i - 1].measure);
}

TEST_CASE("budget exhaustion keeps the best estimate") {
  SublevelOptions opt;
  opt.budget = 200;
  try {
    measure_sublevel(SublevelFunction::monomial(1, 1), kSquare, 1e-3, opt);
    FAIL("expected BudgetExceeded");
  } catch (const SublevelBudgetExceeded& e) {
    CHECK(e.code() == ErrorCode::budget_exceeded);
    const double exact = monomial_sublevel_exact(1, 1, 1e-3);
    CHECK(std::abs(e.best().measure - exact) <= e.best().uncertainty);
  }
}

TEST_CASE("fits on closed-form samples") {
  const auto rs = default_r_grid();
  SublevelFit a = fit_sublevel_law(exact_samples(1, 1, rs));
  CHECK(a.epsilon == doctest::Approx(1.0).epsilon(0.05));
  CHECK(a.m == 1);
  SublevelFit b = fit_sublevel_law(exact_samples(2, 0, rs));
  CHECK(b.epsilon == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(b.m == 0);
  SublevelFit c = fit_sublevel_law(exact_samples(2, 2, rs));
  CHECK(c.epsilon == doctest::Approx(0.5).epsilon(0.05));
  CHECK(c.m == 1);
  CHECK_THROWS_AS(fit_sublevel_law(exact_samples(1, 1, {1e-3, 1e-2})), Error);
}

TEST_CASE("sublevel bound checks") {
  const auto rs = logspace(1e-6, 1e-1, 8);
  SublevelBoundReport ok = check_sublevel_bound(kSquare, 2, 2, DecayLaw{Rational(1, 2), 1, {}}, rs);
  CHECK(ok.bounded);
  SublevelBoundReport slab = check_sublevel_bound(kSquare, 3, 0, DecayLaw{Rational(1, 3), 0, {}}, rs);
  CHECK(slab.bounded);
  for (const auto& row : slab.rows) CHECK(row.ratio == doctest::Approx(slab.rows.front().ratio).epsilon(1e-3));
  SublevelBoundReport strong = check_sublevel_bound(kSquare, 2, 2, 0.7, 1, rs);
  CHECK_FALSE(strong.bounded);
}
