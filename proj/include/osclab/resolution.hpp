#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "osclab/phase.hpp"
#include "osclab/rational.hpp"

namespace osc {

using Field2D = std::function<double(double, double)>;

struct ShearTerm {
  Rational exponent;
  double coeff = 0.0;
};

/// (x, y) -> (x, sign*y + psi(x)) with psi(x) = sum coeff * x^exponent.
struct ShearMap {
  int sign = 1;
  std::vector<ShearTerm> psi;
};

/// Validates sign, exponents >= 1 strictly increasing, common denominator <= 64.
ShearMap make_shear(int sign, std::vector<ShearTerm> psi);
/// The shear that undoes `s`.
ShearMap inverse_shear(const ShearMap& s);

struct ShearedPhase {
  Field2D eval;
  std::optional<Polynomial> exact;  ///< present when every psi exponent is an integer
  bool positive_x_only = false;
};

ShearedPhase apply_shear(const Polynomial& p, const ShearMap& shear);
ShearedPhase apply_shear(const Phase& phase, const ShearMap& shear);

struct WedgeBound {
  double coeff = 1.0;
  Rational exponent{1};
  double at(double x) const;
};

/// 0 < x <= b, lower(x) < y < upper(x); lower absent means zero.
struct Wedge {
  double b = 1.0;
  WedgeBound upper;
  std::optional<WedgeBound> lower;
};

Wedge make_wedge(double b, WedgeBound upper, std::optional<WedgeBound> lower = std::nullopt);

struct OrderRatio {
  int l = 0;
  int m = 0;
  double ratio_min = 0.0;
  double ratio_max = 0.0;
  double constant = 0.0;
  bool pass = false;
};

struct MonomializationReport {
  Rational alpha_i;
  int beta_i = 0;
  double d_i = 0.0;
  std::vector<OrderRatio> orders;
  bool exact_derivatives = false;
  bool pass = false;
};

struct ComparabilityOptions {
  int l_max = 0;
  int m_max = 0;
  int grid = 16;
  double delta_tol = 0.35;
};

MonomializationReport check_comparability(const ShearedPhase& f, const Wedge& wedge, Rational alpha_i, int beta_i,
                                          const ComparabilityOptions& opt);

/// Terms of minimal weight alpha + M beta, returned as a polynomial in y alone.
struct PrincipalPart {
  Rational alpha_min;
  Polynomial r;
};
PrincipalPart principal_part(const Polynomial& f, Rational M);

struct ResidualOrder {
  int l = 0;
  double fitted_exponent = 0.0;
  double delta_est = 0.0;
  bool zero_residual = false;
};

struct PrincipalPartReport {
  std::vector<ResidualOrder> orders;
  double delta_est = 0.0;
  bool pass = false;
};

struct PrincipalPartOptions {
  int l_max = 0;
  int grid = 16;
  double min_delta = 0.05;
};

/// Fits the x-exponent of d^l/dx^l [f(x, x^M y) - x^alpha r(y)] for y in [0, H];
/// requires it to exceed alpha - l by more than min_delta. Throws RootInRange if r vanishes on [0, H].
PrincipalPartReport check_principal_part(const ShearedPhase& f, const Wedge& wedge, const Polynomial& r,
                                         Rational alpha_i, const PrincipalPartOptions& opt);

}  // namespace osc
