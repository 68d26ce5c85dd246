#include "osclab/phase.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "osclab/error.hpp"
#include "osclab/numeric.hpp"

namespace osc {

namespace {

std::optional<Rational> exact_mul(const std::optional<Rational>& a, const std::optional<Rational>& b) {
  if (!a || !b) return std::nullopt;
  try {
    return *a * *b;
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::optional<Rational> exact_add(const std::optional<Rational>& a, const std::optional<Rational>& b) {
  if (!a || !b) return std::nullopt;
  try {
    return *a + *b;
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::optional<Rational> exact_from_double(double v) {
  if (std::abs(v) < 9.0e15 && v == std::nearbyint(v)) return Rational(static_cast<std::int64_t>(v));
  return std::nullopt;
}

bool canonical_less(const Term& a, const Term& b) {
  if (a.alpha != b.alpha) return a.alpha > b.alpha;
  return a.beta < b.beta;
}

}  // namespace

Polynomial::Polynomial(std::vector<Term> terms) {
  std::map<std::pair<int, int>, Term> merged;
  for (auto& t : terms) {
    if (t.alpha < 0 || t.beta < 0) throw Error(ErrorCode::validation, "negative exponent");
    auto key = std::make_pair(t.alpha, t.beta);
    auto it = merged.find(key);
    if (it == merged.end()) {
      merged.emplace(key, t);
    } else {
      it->second.exact = exact_add(it->second.exact, t.exact);
      it->second.coeff = it->second.exact ? it->second.exact->to_double() : it->second.coeff + t.coeff;
    }
  }
  for (auto& [key, t] : merged) {
    bool zero = t.exact ? t.exact->num() == 0 : t.coeff == 0.0;
    if (!zero) terms_.push_back(t);
  }
  std::sort(terms_.begin(), terms_.end(), canonical_less);
}

bool Polynomial::is_exact() const noexcept {
  return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) { return t.exact.has_value(); });
}

int Polynomial::total_degree() const noexcept {
  int d = 0;
  for (const auto& t : terms_) d = std::max(d, t.alpha + t.beta);
  return d;
}

double Polynomial::eval(double x, double y) const noexcept {
  NeumaierSum sum;
  for (const auto& t : terms_) sum.add(t.coeff * ipow(x, t.alpha) * ipow(y, t.beta));
  return sum.value();
}

Polynomial Polynomial::pruned(double rel) const {
  double cmax = 0.0;
  for (const auto& t : terms_) cmax = std::max(cmax, std::abs(t.coeff));
  std::vector<Term> kept;
  for (const auto& t : terms_) {
    if (t.exact || std::abs(t.coeff) > rel * cmax) kept.push_back(t);
  }
  return Polynomial(std::move(kept));
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  std::vector<Term> all = a.terms_;
  all.insert(all.end(), b.terms_.begin(), b.terms_.end());
  return Polynomial(std::move(all));
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  std::vector<Term> out;
  out.reserve(a.terms_.size() * b.terms_.size());
  for (const auto& s : a.terms_) {
    for (const auto& t : b.terms_) {
      Term p;
      p.alpha = s.alpha + t.alpha;
      p.beta = s.beta + t.beta;
      p.exact = exact_mul(s.exact, t.exact);
      p.coeff = p.exact ? p.exact->to_double() : s.coeff * t.coeff;
      out.push_back(p);
    }
  }
  return Polynomial(std::move(out));
}

Polynomial Polynomial::scaled(double c, std::optional<Rational> exact) const {
  std::vector<Term> out = terms_;
  for (auto& t : out) {
    t.exact = exact_mul(t.exact, exact);
    t.coeff = t.exact ? t.exact->to_double() : t.coeff * c;
  }
  return Polynomial(std::move(out));
}

Polynomial Polynomial::pow(int k) const {
  Polynomial result = constant(1.0, Rational(1));
  Polynomial base = *this;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

Polynomial Polynomial::constant(double c, std::optional<Rational> exact) { return monomial(0, 0, c, exact); }

Polynomial Polynomial::monomial(int alpha, int beta, double c, std::optional<Rational> exact) {
  Term t;
  t.alpha = alpha;
  t.beta = beta;
  t.exact = exact;
  t.coeff = exact ? exact->to_double() : c;
  return Polynomial({t});
}

Phase::Phase(Polynomial poly, std::string label) : poly_(std::move(poly)), label_(std::move(label)) {
  if (poly_.empty()) throw Error(ErrorCode::validation, "phase needs at least one nonzero term");
  for (const auto& t : poly_.terms()) {
    if (t.alpha + t.beta <= 1) {
      throw Error(ErrorCode::validation, "phase term x^" + std::to_string(t.alpha) + "*y^" + std::to_string(t.beta) +
                                             " has total degree <= 1");
    }
    if (t.alpha > kMaxExponent || t.beta > kMaxExponent) throw Error(ErrorCode::validation, "exponent above 64");
    if (!std::isfinite(t.coeff)) throw Error(ErrorCode::validation, "non-finite coefficient");
  }
  if (label_.empty()) label_ = format_polynomial(poly_);
}

Phase Phase::from_literal(std::string_view literal, std::string label) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(literal);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::validation, std::string("phase literal is not JSON: ") + e.what());
  }
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::validation, "phase literal must be a non-empty list");
  std::vector<Term> terms;
  std::map<std::pair<int, int>, bool> seen;
  for (const auto& q : j) {
    if (!q.is_array() || (q.size() != 4 && q.size() != 3)) {
      throw Error(ErrorCode::validation, "phase term must be [alpha, beta, num, den]");
    }
    if (!q[0].is_number_integer() || !q[1].is_number_integer()) {
      throw Error(ErrorCode::validation, "exponents must be integers");
    }
    Term t;
    auto a = q[0].get<std::int64_t>();
    auto b = q[1].get<std::int64_t>();
    if (a < 0 || b < 0 || a > kMaxExponent || b > kMaxExponent) {
      throw Error(ErrorCode::validation, "exponents must lie in [0, 64]");
    }
    t.alpha = static_cast<int>(a);
    t.beta = static_cast<int>(b);
    if (q.size() == 4) {
      if (!q[2].is_number_integer() || !q[3].is_number_integer()) {
        throw Error(ErrorCode::validation, "coefficient numerator and denominator must be integers");
      }
      auto den = q[3].get<std::int64_t>();
      if (den == 0) throw Error(ErrorCode::validation, "zero coefficient denominator");
      t.exact = Rational(q[2].get<std::int64_t>(), den);
      t.coeff = t.exact->to_double();
    } else {
      if (!q[2].is_number()) throw Error(ErrorCode::validation, "coefficient must be a number");
      t.coeff = q[2].get<double>();
    }
    if (t.coeff == 0.0) throw Error(ErrorCode::validation, "zero coefficient");
    if (!seen.emplace(std::make_pair(t.alpha, t.beta), true).second) {
      throw Error(ErrorCode::validation, "repeated exponent pair in phase literal");
    }
    terms.push_back(t);
  }
  return Phase(Polynomial(std::move(terms)), std::move(label));
}

std::string Phase::to_literal() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& t : poly_.terms()) {
    if (t.exact) {
      j.push_back({t.alpha, t.beta, t.exact->num(), t.exact->den()});
    } else {
      j.push_back({t.alpha, t.beta, t.coeff});
    }
  }
  return j.dump();
}

std::string format_polynomial(const Polynomial& p) {
  if (p.empty()) return "0";
  std::vector<Term> order = p.terms();
  std::stable_sort(order.begin(), order.end(), [](const Term& a, const Term& b) {
    return a.alpha + a.beta < b.alpha + b.beta;
  });
  std::ostringstream os;
  bool first = true;
  for (const auto& t : order) {
    bool negative = t.coeff < 0.0;
    if (first) {
      if (negative) os << "-";
    } else {
      os << (negative ? " - " : " + ");
    }
    first = false;
    std::string mag;
    if (t.exact) {
      Rational a = t.exact->num() < 0 ? -*t.exact : *t.exact;
      mag = a == Rational(1) ? "" : a.str();
    } else {
      std::ostringstream c;
      c.precision(12);
      c << std::abs(t.coeff);
      mag = c.str() == "1" ? "" : c.str();
    }
    std::vector<std::string> factors;
    if (!mag.empty()) factors.push_back(mag);
    if (t.alpha == 1) factors.emplace_back("x");
    if (t.alpha > 1) factors.push_back("x^" + std::to_string(t.alpha));
    if (t.beta == 1) factors.emplace_back("y");
    if (t.beta > 1) factors.push_back("y^" + std::to_string(t.beta));
    if (factors.empty()) factors.emplace_back("1");
    for (std::size_t i = 0; i < factors.size(); ++i) os << (i ? "*" : "") << factors[i];
  }
  return os.str();
}

double eval_phase(const Phase& phase, double x, double y) noexcept { return phase.eval(x, y); }

Polynomial partial_derivative(const Polynomial& p, int dx, int dy) {
  if (dx < 0 || dy < 0) throw Error(ErrorCode::validation, "derivative order must be nonnegative");
  std::vector<Term> out;
  for (const auto& t : p.terms()) {
    if (t.alpha < dx || t.beta < dy) continue;
    std::int64_t factor = 1;
    for (int k = 0; k < dx; ++k) factor *= t.alpha - k;
    for (int k = 0; k < dy; ++k) factor *= t.beta - k;
    Term d;
    d.alpha = t.alpha - dx;
    d.beta = t.beta - dy;
    d.exact = exact_mul(t.exact, Rational(factor));
    d.coeff = d.exact ? d.exact->to_double() : t.coeff * static_cast<double>(factor);
    out.push_back(d);
  }
  return Polynomial(std::move(out));
}

int order_of_zero(const Polynomial& p) {
  if (p.empty()) throw Error(ErrorCode::validation, "zero polynomial has no finite order");
  int order = p.terms().front().alpha + p.terms().front().beta;
  for (const auto& t : p.terms()) order = std::min(order, t.alpha + t.beta);
  return order;
}

Phase linear_change(const Phase& phase, const std::array<double, 4>& a) {
  double det = a[0] * a[3] - a[1] * a[2];
  double scale = std::max({std::abs(a[0]), std::abs(a[1]), std::abs(a[2]), std::abs(a[3])});
  if (scale == 0.0 || std::abs(det) <= 1e-14 * scale * scale) {
    throw Error(ErrorCode::singular_matrix, "linear change of variables has zero determinant");
  }
  auto linear = [](double c1, double c2) {
    return Polynomial::monomial(1, 0, c1, exact_from_double(c1)) + Polynomial::monomial(0, 1, c2, exact_from_double(c2));
  };
  Polynomial u = linear(a[0], a[1]);
  Polynomial v = linear(a[2], a[3]);
  Polynomial result;
  for (const auto& t : phase.terms()) result = result + (u.pow(t.alpha) * v.pow(t.beta)).scaled(t.coeff, t.exact);
  return Phase(result.pruned(1e-14), phase.label() + " o A");
}

}  // namespace osc
