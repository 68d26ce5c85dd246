#include "osclab/newton_polygon.hpp"

#include <algorithm>
#include <map>

#include "osclab/error.hpp"

namespace osc {

namespace {

std::int64_t cross(const LatticePoint& o, const LatticePoint& a, const LatticePoint& b) {
  return static_cast<std::int64_t>(a.alpha - o.alpha) * (b.beta - o.beta) -
         static_cast<std::int64_t>(a.beta - o.beta) * (b.alpha - o.alpha);
}

}  // namespace

NewtonPolygon newton_polygon(const Polynomial& p) {
  if (p.empty()) throw Error(ErrorCode::validation, "Newton polygon of the zero polynomial");
  // Lowest beta per alpha is all that can reach the boundary.
  std::map<int, int> lowest;
  for (const auto& t : p.terms()) {
    auto it = lowest.find(t.alpha);
    if (it == lowest.end() || t.beta < it->second) lowest[t.alpha] = t.beta;
  }
  std::vector<LatticePoint> pts;
  for (auto [a, b] : lowest) pts.push_back({a, b});

  // Lower hull, alpha ascending, stopping once beta stops decreasing.
  std::vector<LatticePoint> hull;
  for (const auto& q : pts) {
    if (!hull.empty() && q.beta >= hull.back().beta) continue;
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), q) <= 0) hull.pop_back();
    hull.push_back(q);
  }
  std::reverse(hull.begin(), hull.end());

  NewtonPolygon np;
  np.vertices = hull;
  for (std::size_t i = 0; i + 1 < hull.size(); ++i) {
    NewtonEdge e;
    e.from = hull[i];
    e.to = hull[i + 1];
    e.slope = Rational(e.to.beta - e.from.beta, e.to.alpha - e.from.alpha);
    np.edges.push_back(e);
  }
  return np;
}

NewtonDistance newton_distance_info(const NewtonPolygon& np) {
  const auto& v = np.vertices;
  if (v.empty()) throw Error(ErrorCode::validation, "empty Newton polygon");
  auto g = [](const LatticePoint& q) { return q.alpha - q.beta; };
  // v.front() has the smallest beta, v.back() the smallest alpha.
  if (g(v.front()) < 0) return {Rational(v.front().beta), Crossing::horizontal_ray};
  if (g(v.back()) > 0) return {Rational(v.back().alpha), Crossing::vertical_ray};
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (g(v[i]) == 0) return {Rational(v[i].alpha), Crossing::vertex};
    if (i + 1 < v.size() && g(v[i]) > 0 && g(v[i + 1]) < 0) {
      Rational s(g(v[i]), g(v[i]) - g(v[i + 1]));
      Rational t = Rational(v[i].alpha) + s * Rational(v[i + 1].alpha - v[i].alpha);
      return {t, Crossing::edge};
    }
  }
  throw Error(ErrorCode::internal, "bisectrix does not meet the Newton polygon");
}

Rational newton_distance(const NewtonPolygon& np) { return newton_distance_info(np).d; }

DecayLaw predict_decay(const NewtonPolygon& np, Adapted adapted) {
  if (adapted != Adapted::asserted) {
    throw Error(ErrorCode::not_asserted, "decay prediction requires coordinates asserted to be adapted");
  }
  NewtonDistance nd = newton_distance_info(np);
  DecayLaw law;
  law.epsilon = Rational(1) / nd.d;
  law.m = (nd.crossing == Crossing::vertex && nd.d > Rational(1)) ? 1 : 0;
  return law;
}

SublevelLaw sublevel_decay(const DecayLaw& law) {
  SublevelLaw s;
  s.law = law;
  s.candidates.push_back(law);
  if (law.epsilon == Rational(1) && law.m == 0) {
    s.ambiguous = true;
    DecayLaw alt = law;
    alt.m = 1;
    s.candidates.push_back(alt);
  }
  return s;
}

bool uniform_bound_applicable(const DecayLaw& law) { return law.epsilon <= Rational(1, 3); }

}  // namespace osc
