#pragma once

#include <optional>
#include <vector>

#include "osclab/phase.hpp"
#include "osclab/rational.hpp"

namespace osc {

struct LatticePoint {
  int alpha = 0;
  int beta = 0;
  friend bool operator==(const LatticePoint&, const LatticePoint&) = default;
};

struct NewtonEdge {
  LatticePoint from;
  LatticePoint to;
  Rational slope;  ///< d(beta)/d(alpha), always negative
};

/// Boundary of the convex hull of supp + R_+^2. Vertices run with alpha strictly
/// decreasing and beta strictly increasing.
struct NewtonPolygon {
  std::vector<LatticePoint> vertices;
  std::vector<NewtonEdge> edges;
};

enum class Crossing { vertex, edge, vertical_ray, horizontal_ray };

struct NewtonDistance {
  Rational d;
  Crossing crossing = Crossing::vertex;
};

/// Decay law lambda^-epsilon (ln lambda)^m; C is left empty when it is not known.
struct DecayLaw {
  Rational epsilon;
  int m = 0;
  std::optional<double> C;
  friend bool operator==(const DecayLaw& a, const DecayLaw& b) { return a.epsilon == b.epsilon && a.m == b.m; }
};

enum class Adapted { unknown, asserted };

struct SublevelLaw {
  DecayLaw law;
  bool ambiguous = false;
  std::vector<DecayLaw> candidates;
};

NewtonPolygon newton_polygon(const Polynomial& p);
NewtonDistance newton_distance_info(const NewtonPolygon& np);
Rational newton_distance(const NewtonPolygon& np);

/// Throws NotAsserted unless the caller vouches that the coordinates are adapted.
DecayLaw predict_decay(const NewtonPolygon& np, Adapted adapted);

/// The law (1, 0) also admits (1, 1) for the sublevel measure; the result lists both.
SublevelLaw sublevel_decay(const DecayLaw& law);

/// epsilon <= 1/3, the range where the mu-uniform bound is stated.
bool uniform_bound_applicable(const DecayLaw& law);

}  // namespace osc
