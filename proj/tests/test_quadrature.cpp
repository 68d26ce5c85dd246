#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <complex>

#include "osclab/error.hpp"
#include "osclab/phase.hpp"
#include "osclab/quadrature.hpp"

using namespace osc;

namespace {

const Phase kDisc = Phase::from_literal("[[2,0,1,1],[0,2,1,1]]");

// Integral of the radial bump over the plane by adaptive 1D quadrature in r.
double bump_mass(const BumpSpec& b) {
  auto f = [&](double r) { return bump_value(b, r) * r; };
  return M_PI * b.rho0 * b.rho0 +
         2 * M_PI * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, b.rho0, b.rho, 15, 1e-14);
}

}  // namespace

TEST_CASE("bump shape") {
  BumpSpec b = make_bump(0.5);
  CHECK(b.rho0 == 0.25);
  CHECK(bump_value(b, 0.0) == 1.0);
  CHECK(bump_value(b, 0.25) == 1.0);
  CHECK(bump_value(b, 0.5) == 0.0);
  CHECK(bump_value(b, 0.7) == 0.0);
  for (double r = 0.26; r < 0.5; r += 0.02) {
    const double v = bump_value(b, r);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    const double fd = (bump_value(b, r + 1e-6) - bump_value(b, r - 1e-6)) / 2e-6;
    CHECK(bump_derivative(b, r) == doctest::Approx(fd).epsilon(1e-5));
  }
  CHECK_THROWS_AS(make_bump(0.5, 0.6), Error);
  CHECK_THROWS_AS(make_bump(-1.0), Error);
}

TEST_CASE("zero frequency gives the bump mass") {
  const BumpSpec b = make_bump(0.5);
  const Phase phases[] = {kDisc, Phase::from_literal("[[2,2,1,1]]"), Phase::from_literal("[[3,0,1,1]]")};
  for (const auto& s : phases) {
    Quad2DResult r = integrate_T(s, 0, 0, 0, b);
    CHECK(r.converged);
    CHECK(r.value.real() == doctest::Approx(bump_mass(b)).epsilon(1e-9));
    CHECK(std::abs(r.value.imag()) < 1e-12);
    CHECK(std::abs(integrate_U(s, 0, b).value - r.value) < 1e-12);
  }
}

TEST_CASE("conjugation symmetry") {
  const BumpSpec b = make_bump(0.5);
  Phase s = Phase::from_literal("[[3,0,1,1],[1,2,2,1],[0,4,1,1]]");
  Quad2DResult p = integrate_T(s, 300, 7, -4, b);
  Quad2DResult m = integrate_T(s, -300, -7, 4, b);
  CHECK(std::abs(p.value - std::conj(m.value)) <= p.abs_error + m.abs_error + 1e-14);
}

TEST_CASE("nondegenerate stationary phase") {
  const BumpSpec b = make_bump(0.5);
  Quad2DResult t = integrate_T(kDisc, 1e3, 0, 0, b);
  CHECK(t.converged);
  CHECK(std::abs(t.value) == doctest::Approx(M_PI / 1e3).epsilon(0.05));
  Quad2DResult u = integrate_U(kDisc, 1e4, b);
  CHECK(std::abs(u.value) == doctest::Approx(M_PI / 1e4).epsilon(0.05));
}

TEST_CASE("halving the tolerance stays within the error estimates") {
  const BumpSpec b = make_bump(0.5);
  Phase s = Phase::from_literal("[[2,2,1,1]]");
  QuadOptions q1, q2;
  q1.tol = 1e-7;
  q2.tol = 5e-8;
  Quad2DResult a = integrate_T(s, 2e3, 1, 2, b, q1), c = integrate_T(s, 2e3, 1, 2, b, q2);
  CHECK(a.converged);
  CHECK(c.converged);
  CHECK(a.abs_error <= q1.tol);
  CHECK(std::abs(a.value - c.value) <= a.abs_error + c.abs_error);
}

TEST_CASE("panel budget exhaustion") {
  QuadOptions q;
  q.panel_budget = 64;
  Quad2DResult r = integrate_T(kDisc, 1e4, 0, 0, make_bump(0.5), q);
  CHECK_FALSE(r.converged);
  CHECK(std::isfinite(r.abs_error));
}

TEST_CASE("thread count does not change the bits") {
  const BumpSpec b = make_bump(0.5);
  Phase s = Phase::from_literal("[[3,0,1,1],[0,3,1,1]]");
  QuadOptions one, four;
  four.threads = 4;
  Quad2DResult a = integrate_T(s, 5e3, 3, 1, b, one), c = integrate_T(s, 5e3, 3, 1, b, four);
  CHECK(a.value == c.value);
  CHECK(a.abs_error == c.abs_error);
  CHECK(a.panels == c.panels);
}

TEST_CASE("damped integral") {
  const BumpSpec b = make_bump(0.5);
  Quad2DResult big = integrate_R(kDisc, 1e3, 0, 0, b);
  CHECK(big.value.real() == doctest::Approx(M_PI / 1e3).epsilon(0.05));
  // Gaussian oracle: phi = 1 where the Gaussian lives, so the value is pi/lambda up to e^{-lambda rho0^2}.
  CHECK(big.value.real() == doctest::Approx(M_PI / 1e3).epsilon(1e-8));
  Quad2DResult small = integrate_R(kDisc, 1e-8, 0, 0, b);
  CHECK(small.value.real() == doctest::Approx(bump_mass(b)).epsilon(1e-7));
  try {
    integrate_R(Phase::from_literal("[[2,0,1,1],[0,2,-1,1]]"), 10, 0, 0, b);
    FAIL("expected NegativePhase");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::negative_phase);
  }
  CHECK_THROWS_AS(integrate_R(kDisc, -1.0, 0, 0, b), Error);
}

TEST_CASE("kernel grid") {
  const BumpSpec b = make_bump(0.5);
  auto v = kernel_T_grid(kDisc, 0.0, b, {{0.0, 0.0}});
  CHECK(v[0].value.real() == doctest::Approx(bump_mass(b)).epsilon(1e-9));
  double lo = 1e9, hi = 0.0, last = 0.0;
  for (double t : {10.0, 31.6, 100.0, 316.0, 1000.0}) {
    auto k = kernel_T_grid(kDisc, t, b, {{0.0, 0.0}, {0.3, 0.4}});
    last = std::abs(k[0].value) * t;
    lo = std::min(lo, last);
    hi = std::max(hi, last);
    CHECK(k[1].converged);
  }
  CHECK(hi / lo < 1.5);
  CHECK(last == doctest::Approx(M_PI).epsilon(0.05));
  // Along a ray the kernel times |x|^(1/2) stays bounded.
  double worst = 0.0;
  for (double r = 4; r <= 64; r *= 2) {
    auto k = kernel_T_grid(kDisc, 20.0, b, {{r * 0.6, r * 0.8}});
    worst = std::max(worst, std::abs(k[0].value) * std::sqrt(r));
  }
  CHECK(worst < 2.0);
}

TEST_CASE("one-dimensional oscillatory quadrature agrees with brute force") {
  auto f = polynomial_1d({0, 0, 1});
  auto g = polynomial_1d({1, 0, -2, 0, 1});
  const double lambda = 40;
  Quad1DResult q = oscillatory_1d(f, g, -1, 1, lambda, 1e-12);
  auto re = [&](double t) { return std::cos(lambda * t * t) * g(t, 0); };
  auto im = [&](double t) { return std::sin(lambda * t * t) * g(t, 0); };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  std::complex<double> ref(GK::integrate(re, -1.0, 1.0, 20, 1e-14), GK::integrate(im, -1.0, 1.0, 20, 1e-14));
  CHECK(std::abs(q.value - ref) < 1e-10);
}

TEST_CASE("van der Corput bound") {
  VdcInput in;
  in.amplitude = polynomial_1d({1, 0, -2, 0, 1});
  in.C_bound = 3.0;
  in.f = polynomial_1d({0, 0, 1});
  in.n = 2;
  in.C = 2.0;
  in.C_lower = 2.0;
  double lo = 1e9, hi = 0;
  for (double lambda : {10.0, 100.0, 1000.0, 1e4}) {
    in.lambda = lambda;
    VdcResult r = vdc_check_1d(in);
    CHECK(r.holds);
    const double s = r.lhs * std::sqrt(1 + lambda);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  // Fresnel limit sqrt(pi) g(0).
  CHECK(hi / lo < 1.3);
  CHECK(hi == doctest::Approx(std::sqrt(M_PI)).epsilon(0.1));

  in.f = polynomial_1d({0.1, 0, 0, 1});
  in.n = 3;
  in.C = 6.0 + 6.0;
  in.C_lower = 6.0;
  lo = 1e9;
  hi = 0;
  for (double lambda : {10.0, 100.0, 1000.0, 1e4}) {
    in.lambda = lambda;
    VdcResult r = vdc_check_1d(in);
    CHECK(r.holds);
    const double s = r.lhs * std::cbrt(1 + lambda);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  CHECK(hi / lo < 2.0);

  in.lambda = 0;
  VdcResult z = vdc_check_1d(in);
  CHECK(z.lhs == doctest::Approx(16.0 / 15.0).epsilon(1e-10));
  CHECK(z.holds);

  in.C_lower = 7.0;
  try {
    vdc_check_1d(in);
    FAIL("expected HypothesisViolated");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::hypothesis_violated);
  }
}
