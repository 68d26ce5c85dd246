#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "osclab/rational.hpp"

namespace osc {

inline constexpr int kMaxExponent = 64;

/// One monomial coeff * x^alpha * y^beta. `exact` is kept while the coefficient is known as a fraction.
struct Term {
  int alpha = 0;
  int beta = 0;
  double coeff = 0.0;
  std::optional<Rational> exact;
};

/// Bivariate polynomial with unique exponent pairs and nonzero coefficients,
/// stored in canonical order (alpha descending, then beta ascending).
class Polynomial {
 public:
  Polynomial() = default;
  /// Merges repeated exponent pairs and drops zero coefficients.
  explicit Polynomial(std::vector<Term> terms);

  const std::vector<Term>& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }
  bool is_exact() const noexcept;
  int total_degree() const noexcept;

  /// Neumaier-compensated sum of the monomial values.
  double eval(double x, double y) const noexcept;

  /// Drops terms with |coeff| <= rel * max|coeff| that have no exact value.
  Polynomial pruned(double rel) const;

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  Polynomial scaled(double c, std::optional<Rational> exact) const;
  Polynomial pow(int k) const;

  static Polynomial constant(double c, std::optional<Rational> exact);
  static Polynomial monomial(int alpha, int beta, double c, std::optional<Rational> exact);

 private:
  std::vector<Term> terms_;
};

/// A validated phase: at least one term and no term of total degree <= 1.
class Phase {
 public:
  Phase(Polynomial poly, std::string label = {});

  /// Parses `[[alpha, beta, num, den], ...]`.
  static Phase from_literal(std::string_view literal, std::string label = {});

  const Polynomial& poly() const noexcept { return poly_; }
  const std::vector<Term>& terms() const noexcept { return poly_.terms(); }
  const std::string& label() const noexcept { return label_; }
  double eval(double x, double y) const noexcept { return poly_.eval(x, y); }

  /// Literal form; terms without an exact coefficient are written as [alpha, beta, value].
  std::string to_literal() const;

 private:
  Polynomial poly_;
  std::string label_;
};

/// Human-readable canonical form such as "x^2*y^2 + x^3".
std::string format_polynomial(const Polynomial& p);

double eval_phase(const Phase& phase, double x, double y) noexcept;
Polynomial partial_derivative(const Polynomial& p, int dx, int dy);
/// Smallest total degree among the terms; equals the order of vanishing at the origin.
int order_of_zero(const Polynomial& p);
/// S(a11 x + a12 y, a21 x + a22 y). Throws SingularMatrix when the determinant is zero.
Phase linear_change(const Phase& phase, const std::array<double, 4>& a);

}  // namespace osc
