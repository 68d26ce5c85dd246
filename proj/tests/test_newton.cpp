#include <doctest.h>

#include <random>

#include "osclab/error.hpp"
#include "osclab/newton_polygon.hpp"
#include "osclab/phase.hpp"

using namespace osc;

namespace {

NewtonPolygon poly_of(const char* s) { return newton_polygon(Phase::from_literal(s).poly()); }

// Smallest t on a grid such that (t, t) dominates a convex combination of two exponents.
double brute_distance(const std::vector<std::array<int, 2>>& pts) {
  double best = 1e9;
  for (const auto& p : pts) {
    for (const auto& q : pts) {
      for (int k = 0; k <= 2000; ++k) {
        const double th = k / 2000.0;
        const double a = th * p[0] + (1 - th) * q[0];
        const double b = th * p[1] + (1 - th) * q[1];
        best = std::min(best, std::max(a, b));
      }
    }
  }
  return best;
}

std::vector<std::array<int, 2>> exponents(const Polynomial& p) {
  std::vector<std::array<int, 2>> v;
  for (const auto& t : p.terms()) v.push_back({t.alpha, t.beta});
  return v;
}

}  // namespace

TEST_CASE("polygon vertices") {
  auto a = poly_of("[[2,0,1,1],[0,2,1,1]]");
  REQUIRE(a.vertices.size() == 2);
  CHECK(a.vertices[0] == LatticePoint{2, 0});
  CHECK(a.vertices[1] == LatticePoint{0, 2});
  auto b = poly_of("[[2,2,1,1]]");
  REQUIRE(b.vertices.size() == 1);
  CHECK(b.vertices[0] == LatticePoint{2, 2});
  auto c = poly_of("[[3,0,1,1],[1,1,1,1],[0,3,1,1]]");
  REQUIRE(c.vertices.size() == 3);
  CHECK(c.vertices[1] == LatticePoint{1, 1});
  for (const auto& e : c.edges) CHECK(e.slope < Rational(0));
}

TEST_CASE("newton distance of worked polygons") {
  CHECK(newton_distance(poly_of("[[2,0,1,1],[0,2,1,1]]")) == Rational(1));
  CHECK(newton_distance(poly_of("[[2,2,1,1]]")) == Rational(2));
  CHECK(newton_distance(poly_of("[[3,0,1,1],[0,3,1,1]]")) == Rational(3, 2));
}

TEST_CASE("predicted decay laws") {
  auto law = [](const char* s) { return predict_decay(poly_of(s), Adapted::asserted); };
  CHECK(law("[[2,0,1,1],[0,2,1,1]]") == DecayLaw{Rational(1), 0, {}});
  CHECK(law("[[2,2,1,1]]") == DecayLaw{Rational(1, 2), 1, {}});
  CHECK(law("[[3,0,1,1],[0,3,1,1]]") == DecayLaw{Rational(2, 3), 0, {}});
  CHECK_FALSE(law("[[2,2,1,1]]").C.has_value());
  try {
    predict_decay(poly_of("[[2,2,1,1]]"), Adapted::unknown);
    FAIL("expected NotAsserted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_asserted);
  }
}

TEST_CASE("x^k + y^k laws") {
  for (int k = 2; k <= 8; ++k) {
    std::string s = "[[" + std::to_string(k) + ",0,1,1],[0," + std::to_string(k) + ",1,1]]";
    DecayLaw l = predict_decay(newton_polygon(Phase::from_literal(s).poly()), Adapted::asserted);
    CHECK(l.epsilon == (k == 2 ? Rational(1) : Rational(2, k)));
    CHECK(l.m == 0);
  }
}

TEST_CASE("sublevel law ambiguity") {
  SublevelLaw a = sublevel_decay({Rational(1, 2), 1, {}});
  CHECK_FALSE(a.ambiguous);
  CHECK(a.law == DecayLaw{Rational(1, 2), 1, {}});
  SublevelLaw b = sublevel_decay({Rational(1), 0, {}});
  CHECK(b.ambiguous);
  REQUIRE(b.candidates.size() == 2);
  CHECK(b.candidates[0] == DecayLaw{Rational(1), 0, {}});
  CHECK(b.candidates[1] == DecayLaw{Rational(1), 1, {}});
  CHECK_FALSE(sublevel_decay({Rational(2, 3), 0, {}}).ambiguous);
}

TEST_CASE("uniform bound applicability") {
  CHECK_FALSE(uniform_bound_applicable({Rational(1, 2), 1, {}}));
  CHECK(uniform_bound_applicable({Rational(1, 3), 0, {}}));
  CHECK(uniform_bound_applicable({Rational(1, 4), 0, {}}));
}

TEST_CASE("monomial distance matches the bisectrix search") {
  for (int a = 1; a <= 6; ++a) {
    for (int b = 1; b <= 6; ++b) {
      if (a + b < 2) continue;
      Polynomial p = Polynomial::monomial(a, b, 1.0, Rational(1));
      const double d = newton_distance(newton_polygon(p)).to_double();
      CHECK(d == std::max(a, b));
      CHECK(std::abs(brute_distance(exponents(p)) - d) < 1e-9);
    }
  }
}

TEST_CASE("distance properties on random polynomials") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> e(0, 7);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Term> terms;
    const int n = 1 + trial % 4;
    while (static_cast<int>(terms.size()) < n) {
      int a = e(rng), b = e(rng);
      if (a + b >= 2) terms.push_back({a, b, 1.0, Rational(1)});
    }
    Polynomial p(terms);
    const Rational d = newton_distance(newton_polygon(p));
    CHECK(std::abs(brute_distance(exponents(p)) - d.to_double()) < 2e-3);

    std::vector<Term> swapped;
    for (const auto& t : p.terms()) swapped.push_back({t.beta, t.alpha, t.coeff, t.exact});
    CHECK(newton_distance(newton_polygon(Polynomial(swapped))) == d);

    int a = e(rng), b = e(rng);
    if (a + b < 2) a = 2;
    std::vector<Term> more = p.terms();
    more.push_back({a, b, 0.5, Rational(1, 2)});
    CHECK(newton_distance(newton_polygon(Polynomial(more))) <= d);

    const auto np = newton_polygon(p);
    for (std::size_t i = 1; i < np.vertices.size(); ++i) {
      CHECK(np.vertices[i].alpha < np.vertices[i - 1].alpha);
      CHECK(np.vertices[i].beta > np.vertices[i - 1].beta);
    }
  }
}
